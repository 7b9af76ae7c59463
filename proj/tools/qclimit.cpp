#include <iostream>

#include "qclimit/cli.hpp"

int main(int argc, char** argv) { return qcl::cli::run_main(argc, argv, std::cout, std::cerr); }
