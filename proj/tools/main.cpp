#include <tslagent/cli.hpp>

#include <iostream>

int main( int argc, char** argv )
{
  return tslagent::cli::run( { argv + 1, argv + argc }, std::cin, std::cout, std::cerr );
}
