#include "curvelab/cli.hpp"

#include <iostream>

int main(int argc, char** argv)
{
    return curvelab::cli::run_cli(argc, argv, std::cout, std::cerr);
}
