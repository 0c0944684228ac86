#pragma once

#include <algorithm>
#include <cstdint>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "lfseg/error.hpp"
#include "lfseg/label_set.hpp"

namespace lfseg {

/// Per-class IoU scores over points with a ground-truth label.
struct EvalReport {
  std::size_t class_count = 0;               // C; ids run 0..C
  std::vector<std::uint64_t> confusion;      // (C+1)^2, row = gt, col = pred
  std::map<ClassId, double> per_class_iou;   // classes present in gt
  std::vector<ClassId> absent_classes;       // classes with no gt point
  double miou = 0.0;
  double unlabeled_fraction = 0.0;           // evaluated points predicted 0
  std::uint64_t evaluated = 0;

  std::uint64_t at(ClassId gt, ClassId pred) const { return confusion[gt * (class_count + 1) + pred]; }
};

inline EvalReport evaluate(const std::vector<ClassId>& pred, const std::vector<ClassId>& gt, const LabelSet& labels) {
  if (pred.size() != gt.size()) {
    throw ArgumentError("prediction length " + std::to_string(pred.size()) + " != ground-truth length " +
                        std::to_string(gt.size()));
  }
  EvalReport report;
  report.class_count = labels.class_count();
  const std::size_t dim = report.class_count + 1;
  report.confusion.assign(dim * dim, 0);

  std::uint64_t unlabeled = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (gt[i] == kUnlabeled) continue;
    if (gt[i] >= dim || pred[i] >= dim) throw ArgumentError("label id outside label set at point " + std::to_string(i));
    ++report.confusion[gt[i] * dim + pred[i]];
    ++report.evaluated;
    if (pred[i] == kUnlabeled) ++unlabeled;
  }

  double sum = 0.0;
  for (std::size_t k = 1; k < dim; ++k) {
    std::uint64_t row = 0, col = 0;
    for (std::size_t j = 0; j < dim; ++j) {
      row += report.confusion[k * dim + j];
      if (j != 0) col += report.confusion[j * dim + k];
    }
    if (row == 0) {
      report.absent_classes.push_back(static_cast<ClassId>(k));
      continue;
    }
    const std::uint64_t tp = report.confusion[k * dim + k];
    const std::uint64_t fn = row - tp;
    const std::uint64_t fp = col - tp;
    const double iou = static_cast<double>(tp) / static_cast<double>(tp + fp + fn);
    report.per_class_iou[static_cast<ClassId>(k)] = iou;
    sum += iou;
  }
  report.miou = report.per_class_iou.empty() ? 0.0 : sum / static_cast<double>(report.per_class_iou.size());
  report.unlabeled_fraction =
      report.evaluated == 0 ? 0.0 : static_cast<double>(unlabeled) / static_cast<double>(report.evaluated);
  return report;
}

/// Keeps the entries whose mask value is set.
template <typename T, typename Mask>
std::vector<T> select(const std::vector<T>& values, const std::vector<Mask>& keep) {
  std::vector<T> out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (keep[i]) out.push_back(values[i]);
  }
  return out;
}

inline nlohmann::json report_to_json(const EvalReport& r, const LabelSet& labels) {
  nlohmann::json per_class = nlohmann::json::object();
  for (auto [id, iou] : r.per_class_iou) per_class[labels.name(id)] = iou;
  nlohmann::json absent = nlohmann::json::array();
  for (ClassId id : r.absent_classes) absent.push_back(labels.name(id));
  const std::size_t dim = r.class_count + 1;
  std::vector<std::string> names;
  for (std::size_t id = 0; id < dim; ++id) names.push_back(labels.name(static_cast<ClassId>(id)));
  nlohmann::json confusion = nlohmann::json::array();
  for (std::size_t g = 0; g < dim; ++g) {
    confusion.push_back(std::vector<std::uint64_t>(r.confusion.begin() + static_cast<std::ptrdiff_t>(g * dim),
                                                   r.confusion.begin() + static_cast<std::ptrdiff_t>((g + 1) * dim)));
  }
  return {{"miou", r.miou},
          {"per_class_iou", per_class},
          {"absent_classes", absent},
          {"unlabeled_fraction", r.unlabeled_fraction},
          {"evaluated_points", r.evaluated},
          {"confusion_classes", nlohmann::json(names)},
          {"confusion", confusion}};
}

/// Plain-text table: one row per method, one IoU column per class plus mIoU.
inline std::string report_table(const std::vector<std::pair<std::string, EvalReport>>& rows, const LabelSet& labels) {
  std::vector<ClassId> columns;
  for (const auto& [_, r] : rows) {
    for (auto [id, iou] : r.per_class_iou) {
      if (std::find(columns.begin(), columns.end(), id) == columns.end()) columns.push_back(id);
    }
  }
  std::sort(columns.begin(), columns.end());

  std::size_t first = 6;
  for (const auto& [name, _] : rows) first = std::max(first, name.size());
  std::ostringstream out;
  out << std::left << std::setw(static_cast<int>(first)) << "" << std::right;
  for (ClassId id : columns) out << "  " << std::setw(std::max<int>(8, static_cast<int>(labels.name(id).size()))) << labels.name(id);
  out << "  " << std::setw(8) << "mIoU" << "\n";
  out << std::fixed << std::setprecision(3);
  for (const auto& [name, r] : rows) {
    out << std::left << std::setw(static_cast<int>(first)) << name << std::right;
    for (ClassId id : columns) {
      const int width = std::max<int>(8, static_cast<int>(labels.name(id).size()));
      auto it = r.per_class_iou.find(id);
      if (it == r.per_class_iou.end()) {
        out << "  " << std::setw(width) << "-";
      } else {
        out << "  " << std::setw(width) << it->second;
      }
    }
    out << "  " << std::setw(8) << r.miou << "\n";
  }
  return out.str();
}

}  // namespace lfseg
