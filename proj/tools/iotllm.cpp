#include <iostream>

#include "iotllm/cli.hpp"

int main(int argc, char** argv)
{
    return iotllm::run_cli({argv + 1, argv + argc}, std::cout, std::cerr);
}
