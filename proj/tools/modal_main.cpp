#include "modal/cli.hpp"

int main(int argc, char** argv) {
    return modal::cli::run(std::vector<std::string>(argv + 1, argv + argc));
}
