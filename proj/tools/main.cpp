#include "pectoral/cli.hpp"

#include <iostream>

int main(int argc, char** argv)
{
    return pectoral::run_cli(argc, argv, std::cout, std::cerr);
}
