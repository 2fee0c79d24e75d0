#include "disc_forge/cli.hpp"

int main(int argc, char** argv) { return disc_forge::cli::run(argc, argv); }
