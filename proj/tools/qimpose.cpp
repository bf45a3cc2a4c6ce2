#include "qimpose/cli.hpp"

int main(int argc, char** argv) { return qimpose::cli::main(argc, argv); }
