#include <iostream>
#include <string>
#include <vector>

#include "cos2phi/cli.hpp"

int main(int argc, char **argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return cos2phi::run_command(args, std::cout, std::cerr);
}
