#include "cadet/cli/cli.hpp"

int main(int argc, char** argv)
{
    return cadet::run_cli(argc, argv);
}
