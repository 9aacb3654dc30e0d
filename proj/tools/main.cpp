#include "cli.hpp"

int main(int argc, char** argv) { return rbcount::cli::run(argc, argv); }
