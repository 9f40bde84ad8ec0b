#include "cli.hpp"

int main(int argc, char** argv) {
    return chameleon::cli::dispatch(argc, argv);
}
