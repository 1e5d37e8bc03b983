#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "pima/data/dataset.hpp"
#include "pima/data/split.hpp"

namespace pima::data {

// Prescription records are one JSON object per line:
//   {"id":..,"boxes":[{"id","bbox":[x0,y0,x1,y1],"text","y","class"}],
//    "pills":[{"id","features":[..],"class","prescribed"}]}
// Numbers are written with 17 significant digits.

std::string to_json_line(const Prescription& p);
void write_prescriptions(const std::filesystem::path& path, const std::vector<Prescription>& prescriptions);
/// Throws ParseError naming the line and field; an empty file is an "empty dataset".
std::vector<Prescription> read_prescriptions(const std::filesystem::path& path, const encoders::Vocabulary& vocab);

/// Writes {meta.json, prescriptions.jsonl, vocab.tsv} into `dir` (created).
void save_dataset(const std::filesystem::path& dir, const Dataset& dataset);
Dataset load_dataset(const std::filesystem::path& dir);

/// Writes {meta.json, train.jsonl, test.jsonl, vocab.tsv} into `dir` (created).
void save_split(const std::filesystem::path& dir, const SplitDataset& split);
SplitDataset load_split(const std::filesystem::path& dir);

}  // namespace pima::data
