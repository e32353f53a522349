#include "lexembed/cli.hpp"

int main(int argc, char** argv) {
  return lexembed::cli::run({argv + 1, argv + argc});
}
