#include "hellinger/cli.hpp"

int main(int argc, char** argv) { return hellinger::cli::run(argc, argv); }
