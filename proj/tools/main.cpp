#include "specshape/cli.hpp"

#include <iostream>

int main(int argc, char** argv)
{
    return specshape::cli::run(argc, argv, std::cout, std::cerr);
}
