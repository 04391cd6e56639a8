#include <catch2/catch_amalgamated.hpp>

#include <torch/torch.h>

int main(int argc, char* argv[]) {
  torch::set_num_threads(1);
  torch::manual_seed(1234);
  return Catch::Session().run(argc, argv);
}
