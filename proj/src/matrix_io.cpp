#include "qimpose/matrix_io.hpp"

#include <fstream>

namespace qimpose {

nlohmann::json matrixToJson(const Eigen::MatrixXcd& m) {
  nlohmann::json re = nlohmann::json::array(), im = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json rr = nlohmann::json::array(), ir = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      rr.push_back(m(i, j).real());
      ir.push_back(m(i, j).imag());
    }
    re.push_back(std::move(rr));
    im.push_back(std::move(ir));
  }
  return {{"dim", m.rows()}, {"re", std::move(re)}, {"im", std::move(im)}};
}

Eigen::MatrixXcd matrixFromJson(const nlohmann::json& j) {
  try {
    const auto n = j.at("dim").get<Eigen::Index>();
    if (n < 1) throw Error(ErrorCode::InvalidInput, "matrix dim must be positive");
    const auto& re = j.at("re");
    const bool has_im = j.contains("im");
    if (re.size() != static_cast<std::size_t>(n) || (has_im && j["im"].size() != static_cast<std::size_t>(n)))
      throw Error(ErrorCode::InvalidInput, "matrix row count does not match dim");
    Eigen::MatrixXcd m(n, n);
    for (Eigen::Index r = 0; r < n; ++r) {
      const auto& row = re[static_cast<std::size_t>(r)];
      if (row.size() != static_cast<std::size_t>(n)) throw Error(ErrorCode::InvalidInput, "ragged matrix row");
      for (Eigen::Index c = 0; c < n; ++c) {
        const double im = has_im ? j["im"][static_cast<std::size_t>(r)].at(static_cast<std::size_t>(c)).get<double>() : 0.0;
        m(r, c) = Complex(row[static_cast<std::size_t>(c)].get<double>(), im);
      }
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidInput, std::string("malformed matrix JSON: ") + e.what());
  }
}

nlohmann::json readJsonFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidInput, "cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidInput, path.string() + ": " + e.what());
  }
}

void writeJsonFile(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::InvalidInput, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace qimpose
