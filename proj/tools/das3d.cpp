#include "das3d/cli.hpp"

int main(int argc, char** argv) { return das3d::cli::run(argc, argv); }
