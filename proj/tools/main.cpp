#include "cli.hpp"

int main(int argc, char** argv) { return totvar::cli::run(argc, argv); }
