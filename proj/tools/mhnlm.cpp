#include <iostream>

#include "mhnlm/harness.hpp"

int main(int argc, char** argv) { return mhnlm::run_cli(argc, argv, std::cout, std::cerr); }
