#include <iostream>
#include <string>
#include <vector>

#include "gamici/cli.hpp"

int main(int argc, char** argv)
{
    std::vector<std::string> args(argv, argv + argc);
    return gamici::run_cli(args, std::cout, std::cerr);
}
