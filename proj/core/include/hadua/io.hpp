// core/include/hadua/io.hpp

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#ifndef HADUA_IO_HPP_
#define HADUA_IO_HPP_

#include <string>
#include <vector>

#include "hadua/synthdata.hpp"
#include "hadua/train.hpp"

namespace hadua {

/// Shortest-exact decimal rendering of a double (17 significant digits cap),
/// so CSV values round-trip losslessly.
std::string format_double(double v);

/// Dataset CSV, bit-exact contract: header
/// `subject,label,eeg_0..eeg_{d-1},eye_0..eye_{k-1}`, UTF-8, LF endings.
void write_subject_csv(const std::string& path, const SubjectDataset& dataset);
SubjectDataset read_subject_csv(const std::string& path);

/// All subject_*.csv files listed in a gen-data manifest.
std::vector<SubjectDataset> read_dataset_dir(const std::string& manifest_path);

void write_epoch_log(const std::string& path, const std::vector<EpochRow>& history);
void write_pseudo_stats(const std::string& path, const std::vector<EpochRow>& history);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace hadua

#endif  // HADUA_IO_HPP_
