#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include <torch/torch.h>

#include "moodkit/log.hpp"

int main(int argc, char** argv) {
  torch::set_num_threads(1);
  moodkit::log::set_threshold(moodkit::log::Level::warn);
  doctest::Context context(argc, argv);
  return context.run();
}
