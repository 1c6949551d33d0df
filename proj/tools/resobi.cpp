#include "cli.hpp"

int main(int argc, char** argv)
{
    return resobi::cli::run(argc, argv);
}
