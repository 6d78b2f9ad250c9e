// Recomputes the per-type relative decrease table from the per-model accuracy
// fixtures and prints it next to the published values.

#include <cstdio>
#include <filesystem>

#include "vpb/format.hpp"
#include "vpb/pipeline.hpp"
#include "vpb/report.hpp"

using namespace vpb;
namespace fs = std::filesystem;

int main() {
  const fs::path fx(VPB_FIXTURE_DIR);
  const auto def = table_from_percent_csv(read_text_file(fx / "accuracy_default.csv"));
  const auto bnd = table_from_percent_csv(read_text_file(fx / "accuracy_bounded.csv"));
  const auto gd = group_relative_decrease(def);
  const auto gb = group_relative_decrease(bnd, def);
  const auto rows = parse_csv(read_text_file(fx / "group_decrease_published.csv"));
  std::printf("%-5s %-11s %9s %9s   %9s %9s\n", "alpha", "type", "default", "published", "bounded", "published");
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double a = parse_number(rows[i][0]);
    const ModelType t = parse_model_type(rows[i][1]);
    std::printf("%-5s %-11s %9.4f %9s   %9.4f %9s\n", rows[i][0].c_str(), rows[i][1].c_str(), gd.at(t).at(a),
                rows[i][2].c_str(), gb.at(t).at(a), rows[i][3].c_str());
  }
}
