#include <string>
#include <vector>

#include "deepindex/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return deepindex::cli::run(args);
}
