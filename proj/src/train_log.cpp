#include <cstdio>
#include <string>

#include "dualabsa/training.hpp"

namespace dualabsa {

namespace {

std::string number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string train_log_csv(const std::vector<TrainLogRow>& rows) {
  std::string out = "step,epoch,lr,loss_term,loss_pola,dev_precision,dev_recall,dev_f1\n";
  for (const auto& r : rows) {
    out += std::to_string(r.step) + "," + std::to_string(r.epoch) + "," + number(r.lr) + "," + number(r.loss_term) + "," +
           number(r.loss_pola);
    if (r.dev)
      out += "," + number(r.dev->precision) + "," + number(r.dev->recall) + "," + number(r.dev->f1) + "\n";
    else
      out += ",,,\n";
  }
  return out;
}

}  // namespace dualabsa
