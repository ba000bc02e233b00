#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <tuple>
#include <vector>

namespace ktlab {

// One (skill, correctness) interaction step after vocabulary densification.
struct InteractionStep {
    int skill_index = 0;
    int correct = 0;

    bool operator==(const InteractionStep&) const = default;
};

struct StudentSequence {
    std::string student_id;
    std::vector<InteractionStep> steps;

    size_t length() const { return steps.size(); }
    bool operator==(const StudentSequence&) const = default;
};

struct Dataset {
    std::vector<StudentSequence> sequences;
    // raw skill id -> dense index, in first-seen order; index i holds the raw
    // id mapped to i.
    std::vector<std::string> skill_vocabulary;

    int skill_count() const { return static_cast<int>(skill_vocabulary.size()); }
    size_t student_count() const { return sequences.size(); }
    size_t record_count() const;

    bool operator==(const Dataset&) const = default;
};

// Fixed-length window grids, row-major batch x k. Padded cells hold skill 0 /
// correct 0 with valid=false and are never read into loss or metrics.
struct PaddedBatch {
    size_t batch = 0;
    size_t window = 0; // k
    std::vector<int> skills;
    std::vector<int> correct;
    std::vector<char> valid;
    std::vector<int> lengths;

    int skill_at(size_t row, size_t t) const { return skills[row * window + t]; }
    int correct_at(size_t row, size_t t) const { return correct[row * window + t]; }
    bool valid_at(size_t row, size_t t) const { return valid[row * window + t] != 0; }
};

// One window of one student's sequence; the model's per-row input unit.
struct WindowRow {
    std::vector<int> skills;  // size k, zero padded
    std::vector<int> correct; // size k, zero padded
    size_t length = 0;        // valid prefix
    size_t window = 0;        // k
};

// --- parsing and serialization -------------------------------------------

// CSV contract: UTF-8, header `student_id,skill_id,correct`, LF endings,
// rows grouped per student in temporal order. Dense skill vocabulary is
// built in first-seen order.
Dataset parse_interaction_log(std::istream& in);
Dataset parse_interaction_log_file(const std::string& path);

void write_csv(const Dataset& ds, std::ostream& out);
std::string to_csv(const Dataset& ds);

// Manifest: structured text recording the skill vocabulary, M, and the
// checksum of the CSV the dataset was written to.
void write_manifest(const Dataset& ds, uint64_t csv_checksum, std::ostream& out);

// Writes `<path>` plus a sibling manifest at manifest_path_for(path).
void write_dataset(const Dataset& ds, const std::string& path);
std::string manifest_path_for(const std::string& csv_path);

// Reads a CSV; if a sibling manifest exists, its vocabulary and checksum are
// applied/verified so skill indices stay aligned across splits.
Dataset read_dataset(const std::string& path);

// --- pipeline operations ---------------------------------------------------

// Removes every student with length <= 2; vocabulary and M are unchanged.
Dataset filter_short_sequences(const Dataset& ds);

// Seeded permutation split by student: floor(r0*N) train, floor(r1*N) val,
// remainder test. Throws on fewer than 3 students.
std::tuple<Dataset, Dataset, Dataset> split_by_student(const Dataset& ds,
                                                       std::array<double, 3> ratios,
                                                       uint64_t seed);

// Cuts each sequence into consecutive chunks of <= k steps, right-padding the
// final chunk, then groups chunks into batches of `batch` rows.
std::vector<PaddedBatch> window_sequences(const Dataset& ds, size_t k, size_t batch);

// Flat per-window view used by the trainer (shuffle + regroup per epoch).
std::vector<WindowRow> flatten_windows(const Dataset& ds, size_t k);

// --- synthetic data ---------------------------------------------------------

struct SyntheticSpec {
    int students = 0;
    int skills = 0;
    int length = 0;
    uint64_t seed = 0;
    double ability_mean = 0.0;
    double ability_std = 1.0;
    double difficulty_mean = 0.0;
    double difficulty_std = 1.0;
    // Per-student ability gain applied after every attempt.
    double learn_gain_mean = 0.05;
    double learn_gain_std = 0.02;
};

// Two-parameter logistic response model with additive learning: correct is
// drawn with probability sigmoid(ability - difficulty), ability growing by a
// seeded per-student increment after each attempt.
Dataset generate_synthetic(const SyntheticSpec& spec);
Dataset generate_synthetic(int students, int skills, int length, uint64_t seed);

uint64_t file_checksum(const std::string& path);

} // namespace ktlab
