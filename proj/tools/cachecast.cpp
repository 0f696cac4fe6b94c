#include <string>
#include <vector>

#include "cachecast/cli.hpp"

int main(int argc, char** argv) {
    return cachecast::run_cli(std::vector<std::string>(argv + 1, argv + argc));
}
