#include "kdvlab/cli.h"

int main(int argc, char** argv) { return kdvlab::run_cli(argc, argv); }
