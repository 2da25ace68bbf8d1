#include "cfn/cli.hpp"

int main(int argc, char** argv) { return cfn::run(argc, argv); }
