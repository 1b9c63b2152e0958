#include "pstat/cli.hpp"

#include <iostream>

int main(int argc, char** argv)
{
    return pstat::run_cli(argc, argv, std::cout, std::cerr);
}
