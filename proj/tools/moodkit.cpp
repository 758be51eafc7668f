#include <string>
#include <vector>

#include "moodkit/pipeline.hpp"

int main(int argc, char** argv) {
  return moodkit::run_cli(std::vector<std::string>(argv, argv + argc));
}
