// Trains the desk-profile classifier on a small augmented set and reports timing.
#include <chrono>
#include <cstdio>
#include <cstdlib>

#include "twa/classifier.hpp"
#include "twa/datagen.hpp"

int main(int argc, char** argv) {
  using clock = std::chrono::steady_clock;
  const std::size_t n_train = argc > 1 ? std::strtoul(argv[1], nullptr, 10) : 500;
  const int epochs = argc > 2 ? std::atoi(argv[2]) : 2;
  const double lr = argc > 3 ? std::atof(argv[3]) : 1e-4;
  const int bs = argc > 4 ? std::atoi(argv[4]) : 64;
  twa::AugmentedSetConfig c;
  c.n_train = n_train;
  c.n_test = 300;
  c.seed = argc > 5 ? std::strtoull(argv[5], nullptr, 10) : 7;
  auto t0 = clock::now();
  auto [train, test] = twa::make_augmented_dataset(c);
  auto t1 = clock::now();
  std::printf("datagen %.2fs\n", std::chrono::duration<double>(t1 - t0).count());
  auto model = twa::build_model(twa::ArchConfig::desk(), 1);
  std::printf("params %zu\n", model.parameter_count());
  twa::TrainOpts o;
  o.epochs = epochs;
  o.lr = lr;
  o.batch_size = bs;
  auto rep = twa::train(model, train, o, [&](int e, double l) {
    std::printf("epoch %d loss %.4f t=%.1fs\n", e, l, std::chrono::duration<double>(clock::now() - t1).count());
    std::fflush(stdout);
  });
  std::vector<twa::ModelInput> in;
  std::vector<twa::DynClass> lab;
  for (auto& s : test.samples) {
    in.push_back({s.angles});
    lab.push_back(*s.label);
  }
  auto preds = twa::predict_batch(model, in, 10, 3);
  std::printf("first %.4f train %.3f val %.3f test %.3f total %.1fs\n", rep.first_batch_loss, rep.train_accuracy,
              rep.val_accuracy, twa::accuracy_of(preds, lab),
              std::chrono::duration<double>(clock::now() - t0).count());
}
