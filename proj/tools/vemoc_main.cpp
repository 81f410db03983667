#include "vemoc/cli_io.hpp"

int main(int argc, char** argv) { return vemoc::cli_main(argc, argv); }
