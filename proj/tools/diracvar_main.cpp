#include "diracvar/cli.hpp"

int main(int argc, char** argv) { return diracvar::cli_main(argc, argv); }
