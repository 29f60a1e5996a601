// Slow integration check: on the 3-class size task the epoch-mean loss must
// at least halve from the first epoch to the last. 48 epochs on 2000 samples
// lands at ~0.27x (with ~0.99 training accuracy); 24 epochs is not enough to
// cross the 0.5x bar on every seed.

#include <cstdio>

#include "drpn/synthetic.hpp"
#include "drpn/toynet.hpp"

int main() {
  using namespace drpn::toy;
  const auto data = generate_dataset(default_task(2000, 42));
  ToyNet net = ToyNet::init(3, 42);
  TrainConfig cfg;
  cfg.seed = 42;
  cfg.epochs = 48;
  const TrainResult r = train(net, data, cfg);

  const double first = r.epoch_loss.front();
  const double last = r.epoch_loss.back();
  const bool ok = last <= 0.5 * first;
  std::printf("[%s] loss-halving: epoch-mean %.4f -> %.4f (ratio %.3f, bound 0.5), "
              "train accuracy %.4f\n",
              ok ? "PASS" : "FAIL", first, last, last / first, r.train_accuracy);
  return ok ? 0 : 1;
}
