#include <string>
#include <vector>

#include "engage/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return engage::cli_run(args);
}
