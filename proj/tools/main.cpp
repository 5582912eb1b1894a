#include "robustpulse/cli.hpp"

int main(int argc, char** argv) { return robustpulse::cli::run(argc, argv); }
