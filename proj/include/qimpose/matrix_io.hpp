#pragma once

#include <filesystem>

#include <json.hpp>

#include "qimpose/mathcore.hpp"

namespace qimpose {

// {"dim": n, "re": [[...]], "im": [[...]]}; "im" may be omitted for real matrices.
nlohmann::json matrixToJson(const Eigen::MatrixXcd& m);
Eigen::MatrixXcd matrixFromJson(const nlohmann::json& j);

nlohmann::json readJsonFile(const std::filesystem::path& path);
void writeJsonFile(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace qimpose
