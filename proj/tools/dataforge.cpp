#include "dataforge/cli.hpp"

int main(int argc, char** argv) { return dataforge::cli::run(argc, argv); }
