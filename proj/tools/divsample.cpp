#include "divsample/cli.hpp"

int main(int argc, char** argv) { return divsample::cli::run(argc, argv); }
