// SPDX-License-Identifier: Apache-2.0
#include "mvlpuf/cli.hpp"

int main(int argc, char **argv) { return mvlpuf::cli::main(argc, argv); }
