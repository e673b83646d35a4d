// core/src/io.cpp

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#include "hadua/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "hadua/errors.hpp"

namespace hadua {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& s, const std::string& path) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str()) throw IoError("csv: bad number '" + s + "' in " + path);
  return v;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_subject_csv(const std::string& path, const SubjectDataset& dataset) {
  const std::size_t n = dataset.eeg.rows();
  if (dataset.eye.rows() != n || dataset.labels.size() != n) {
    throw ShapeError("csv: inconsistent row counts in subject dataset");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("csv: cannot open " + path + " for writing");

  out << "subject,label";
  for (std::size_t j = 0; j < dataset.eeg.cols(); ++j) out << ",eeg_" << j;
  for (std::size_t j = 0; j < dataset.eye.cols(); ++j) out << ",eye_" << j;
  out << "\n";
  for (std::size_t r = 0; r < n; ++r) {
    out << dataset.subject << "," << dataset.labels[r];
    for (std::size_t j = 0; j < dataset.eeg.cols(); ++j) {
      out << "," << format_double(dataset.eeg.at(r, j));
    }
    for (std::size_t j = 0; j < dataset.eye.cols(); ++j) {
      out << "," << format_double(dataset.eye.at(r, j));
    }
    out << "\n";
  }
  if (!out) throw IoError("csv: write to " + path + " failed");
}

SubjectDataset read_subject_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw IoError("csv: empty file " + path);

  const auto header = split_csv_line(line);
  if (header.size() < 3 || header[0] != "subject" || header[1] != "label") {
    throw IoError("csv: unexpected header in " + path);
  }
  std::size_t eeg_dim = 0, eye_dim = 0;
  for (std::size_t i = 2; i < header.size(); ++i) {
    if (header[i].rfind("eeg_", 0) == 0) {
      ++eeg_dim;
    } else if (header[i].rfind("eye_", 0) == 0) {
      ++eye_dim;
    } else {
      throw IoError("csv: unexpected column '" + header[i] + "' in " + path);
    }
  }
  if (eeg_dim == 0 || eye_dim == 0) throw IoError("csv: missing feature columns in " + path);

  std::vector<double> eeg_data, eye_data;
  std::vector<int> labels;
  int subject = -1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != 2 + eeg_dim + eye_dim) {
      throw IoError("csv: row with " + std::to_string(cells.size()) + " cells in " + path);
    }
    const int s = static_cast<int>(parse_double(cells[0], path));
    if (subject == -1) subject = s;
    if (s != subject) throw IoError("csv: mixed subject ids in " + path);
    labels.push_back(static_cast<int>(parse_double(cells[1], path)));
    for (std::size_t j = 0; j < eeg_dim; ++j) eeg_data.push_back(parse_double(cells[2 + j], path));
    for (std::size_t j = 0; j < eye_dim; ++j) {
      eye_data.push_back(parse_double(cells[2 + eeg_dim + j], path));
    }
  }
  if (labels.empty()) throw IoError("csv: no data rows in " + path);

  SubjectDataset d;
  d.subject = subject;
  d.eeg = Tensor({labels.size(), eeg_dim}, std::move(eeg_data));
  d.eye = Tensor({labels.size(), eye_dim}, std::move(eye_data));
  d.labels = std::move(labels);
  return d;
}

std::vector<SubjectDataset> read_dataset_dir(const std::string& dir) {
  const std::string manifest_path = dir + "/manifest.json";
  std::ifstream in(manifest_path, std::ios::binary);
  if (!in) throw IoError("dataset: cannot open " + manifest_path);
  nlohmann::json manifest;
  try {
    in >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("dataset: bad manifest " + manifest_path + ": " + e.what());
  }
  std::vector<SubjectDataset> out;
  for (const auto& f : manifest.at("files")) {
    out.push_back(read_subject_csv(dir + "/" + f.get<std::string>()));
  }
  if (out.empty()) throw IoError("dataset: manifest lists no files");
  return out;
}

void write_epoch_log(const std::string& path, const std::vector<EpochRow>& history) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("epoch log: cannot open " + path);
  out << "epoch,L,L_cls,L_MMD,L_CMMD,mu_t,sigma2_t,alpha_t,mean_weight,val_acc,target_acc\n";
  for (const EpochRow& r : history) {
    out << r.epoch << "," << format_double(r.loss) << "," << format_double(r.l_cls) << ","
        << format_double(r.l_mmd) << "," << format_double(r.l_cmmd) << ","
        << format_double(r.mu) << "," << format_double(r.sigma2) << ","
        << format_double(r.alpha) << "," << format_double(r.mean_weight) << ","
        << format_double(r.val_acc) << "," << format_double(r.target_acc) << "\n";
  }
  if (!out) throw IoError("epoch log: write failed");
}

void write_pseudo_stats(const std::string& path, const std::vector<EpochRow>& history) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("pseudo stats: cannot open " + path);
  out << "t,mu_t,sigma2_t,alpha_t,mean_weight\n";
  for (const EpochRow& r : history) {
    out << r.epoch << "," << format_double(r.mu) << "," << format_double(r.sigma2) << ","
        << format_double(r.alpha) << "," << format_double(r.mean_weight) << "\n";
  }
  if (!out) throw IoError("pseudo stats: write failed");
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("io: cannot open " + path + " for writing");
  out << content;
  if (!out) throw IoError("io: write to " + path + " failed");
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("io: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace hadua
