#include "arrayext/cli.hpp"

int main(int argc, char** argv) { return arrayext::cli_dispatch(argc, argv); }
