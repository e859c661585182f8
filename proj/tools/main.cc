#include "commands.h"

int main(int argc, char** argv) { return degctrl::cli::cli_main(argc, argv); }
