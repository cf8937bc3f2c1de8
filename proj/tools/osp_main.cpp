#include <iostream>

#include "osp/cli.hpp"

int main(int argc, char** argv) {
    return osp::cli::run(argc, argv, std::cout, std::cerr);
}
