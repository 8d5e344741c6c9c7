#include "cli.hpp"

int main(int argc, char** argv) { return cestrade::cli::run(argc, argv); }
