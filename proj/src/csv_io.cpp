#include "covgrad/csv_io.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

namespace covgrad {
namespace {

std::vector<std::string> SplitRow(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string StripCr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

}  // namespace

void write_csv(const std::string& path, const CsvTable& table) {
  std::ofstream out(path);
  if (!out) throw CsvError("cannot write '" + path + "'", 0);
  out.imbue(std::locale::classic());
  out << std::setprecision(17);
  for (std::size_t i = 0; i < table.header.size(); ++i) out << (i ? "," : "") << table.header[i];
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << '\n';
  }
  if (!out) throw CsvError("write failed for '" + path + "'", 0);
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CsvError("cannot open '" + path + "'", 0);
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw CsvError(path + ": empty file", 1);
  table.header = SplitRow(StripCr(line));
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    line = StripCr(line);
    if (line.empty()) continue;
    const auto cells = SplitRow(line);
    if (cells.size() != table.header.size()) {
      throw CsvError(path + ": row " + std::to_string(lineno) + " has " +
                         std::to_string(cells.size()) + " fields, expected " +
                         std::to_string(table.header.size()),
                     lineno);
    }
    std::vector<double> row;
    for (const auto& cell : cells) {
      std::istringstream cs(cell);
      cs.imbue(std::locale::classic());
      double v;
      cs >> v;
      if (cs.fail() || !(cs >> std::ws).eof()) {
        throw CsvError(path + ": row " + std::to_string(lineno) + ": bad number '" + cell + "'",
                       lineno);
      }
      row.push_back(v);
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

void write_controls_csv(const std::string& path, const ControlSequence& controls,
                        const std::vector<std::string>& names) {
  CsvTable t;
  t.header = {"step"};
  t.header.insert(t.header.end(), names.begin(), names.end());
  for (std::size_t n = 0; n < controls.size(); ++n) {
    std::vector<double> row{static_cast<double>(n + 1)};
    for (Eigen::Index k = 0; k < controls[n].size(); ++k) row.push_back(controls[n](k));
    t.rows.push_back(std::move(row));
  }
  write_csv(path, t);
}

ControlSequence read_controls_csv(const std::string& path, int control_dim) {
  const CsvTable t = read_csv(path);
  if (static_cast<int>(t.header.size()) != control_dim + 1 || t.header.front() != "step") {
    throw CsvError(path + ": header must be 'step' followed by " + std::to_string(control_dim) +
                       " control columns",
                   1);
  }
  ControlSequence out;
  for (const auto& row : t.rows) {
    Vector u(control_dim);
    for (int k = 0; k < control_dim; ++k) u(k) = row[k + 1];
    out.push_back(std::move(u));
  }
  if (out.empty()) throw CsvError(path + ": no control rows", 0);
  return out;
}

void write_states_csv(const std::string& path, const std::vector<Vector>& states,
                      const std::vector<std::string>& names) {
  CsvTable t;
  t.header = {"step"};
  t.header.insert(t.header.end(), names.begin(), names.end());
  for (std::size_t n = 0; n < states.size(); ++n) {
    std::vector<double> row{static_cast<double>(n)};
    for (Eigen::Index k = 0; k < states[n].size(); ++k) row.push_back(states[n](k));
    t.rows.push_back(std::move(row));
  }
  write_csv(path, t);
}

void write_loss_history_csv(const std::string& path, const std::vector<double>& history) {
  CsvTable t;
  t.header = {"iter", "loss"};
  for (std::size_t i = 0; i < history.size(); ++i) t.rows.push_back({static_cast<double>(i), history[i]});
  write_csv(path, t);
}

void write_error_summary_csv(const std::string& path, const ErrorSummary& summary,
                             const std::vector<std::string>& names) {
  CsvTable t;
  t.header = {"step"};
  for (const auto& n : names) {
    t.header.push_back("mean_" + n);
    t.header.push_back("std_" + n);
  }
  for (Eigen::Index n = 0; n < summary.mean_abs_error.rows(); ++n) {
    std::vector<double> row{static_cast<double>(n)};
    for (Eigen::Index k = 0; k < summary.mean_abs_error.cols(); ++k) {
      row.push_back(summary.mean_abs_error(n, k));
      row.push_back(summary.std_abs_error(n, k));
    }
    t.rows.push_back(std::move(row));
  }
  write_csv(path, t);
}

void write_trace_history_csv(const std::string& path, const ErrorSummary& summary) {
  CsvTable t;
  t.header = {"step", "mean_trace"};
  for (Eigen::Index n = 0; n < summary.mean_trace.size(); ++n) {
    t.rows.push_back({static_cast<double>(n + 1), summary.mean_trace(n)});
  }
  write_csv(path, t);
}

}  // namespace covgrad
