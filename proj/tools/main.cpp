#include "gradmine/cli.hpp"

int main(int argc, char** argv) { return gradmine::cli::run(argc, argv); }
