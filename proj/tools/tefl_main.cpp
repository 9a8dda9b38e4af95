#include <iostream>
#include <string>
#include <vector>

#include "tefl/cli.hpp"

int main(int argc, char** argv) {
    return tefl::run_cli(std::vector<std::string>(argv + 1, argv + argc),
                         std::cout, std::cerr);
}
