#include "beam/cli.hpp"

int main(int argc, char** argv) { return beam::cli::run(argc, argv); }
