#pragma once

#include <string>
#include <vector>

#include "covgrad/errors.hpp"
#include "covgrad/montecarlo.hpp"
#include "covgrad/planner.hpp"

namespace covgrad {

class CsvError : public Error {
 public:
  CsvError(const std::string& what, int row) : Error(what), row_(row) {}
  // 1-based line number in the file (header is line 1); 0 when not tied to a row.
  int row() const { return row_; }

 private:
  int row_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

// Numbers are written with 17 significant digits so a re-read is exact.
void write_csv(const std::string& path, const CsvTable& table);
CsvTable read_csv(const std::string& path);

void write_controls_csv(const std::string& path, const ControlSequence& controls,
                        const std::vector<std::string>& names = {"mu", "nu"});
// Expects a leading `step` column then one column per control component.
ControlSequence read_controls_csv(const std::string& path, int control_dim);

void write_states_csv(const std::string& path, const std::vector<Vector>& states,
                      const std::vector<std::string>& names = {"theta", "px", "py", "lx", "ly"});
void write_loss_history_csv(const std::string& path, const std::vector<double>& history);
void write_error_summary_csv(const std::string& path, const ErrorSummary& summary,
                             const std::vector<std::string>& names = {"theta", "px", "py", "lx", "ly"});
void write_trace_history_csv(const std::string& path, const ErrorSummary& summary);

}  // namespace covgrad
