#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "ktlab/dataio.hpp"
#include "ktlab/errors.hpp"
#include "ktlab/rng.hpp"

using namespace ktlab;

namespace {

Dataset parse_text(const std::string& text) {
    std::istringstream in(text);
    return parse_interaction_log(in);
}

// Random dataset with first-seen-consistent vocabulary (as parse builds it).
Dataset random_dataset(Rng& rng, int students, int skills, int max_len) {
    std::ostringstream csv;
    csv << "student_id,skill_id,correct\n";
    for (int s = 0; s < students; ++s) {
        const int len = 1 + static_cast<int>(rng.below(static_cast<uint64_t>(max_len)));
        for (int t = 0; t < len; ++t) {
            csv << "u" << s << ",sk" << rng.below(static_cast<uint64_t>(skills)) << ","
                << (rng.bernoulli(0.5) ? 1 : 0) << "\n";
        }
    }
    return parse_text(csv.str());
}

std::filesystem::path temp_dir(const std::string& tag) {
    const auto dir = std::filesystem::temp_directory_path() / ("ktlab_dataio_" + tag);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

} // namespace

TEST_CASE("parse: three rows, one student, first-seen vocabulary") {
    const Dataset ds = parse_text("student_id,skill_id,correct\nA,3,1\nA,7,0\nA,3,1\n");
    REQUIRE(ds.student_count() == 1);
    CHECK(ds.skill_count() == 2);
    CHECK(ds.skill_vocabulary[0] == "3");
    CHECK(ds.skill_vocabulary[1] == "7");
    REQUIRE(ds.sequences[0].length() == 3);
    CHECK(ds.sequences[0].steps[0] == InteractionStep{0, 1});
    CHECK(ds.sequences[0].steps[1] == InteractionStep{1, 0});
    CHECK(ds.sequences[0].steps[2] == InteractionStep{0, 1});
}

TEST_CASE("parse errors carry line numbers") {
    SUBCASE("non-binary correct") {
        try {
            parse_text("student_id,skill_id,correct\nA,3,1\nA,3,2\n");
            FAIL("expected DataError");
        } catch (const DataError& e) {
            CHECK(std::string(e.what()).find("line 3") != std::string::npos);
        }
    }
    SUBCASE("wrong arity") {
        try {
            parse_text("student_id,skill_id,correct\nA,3\n");
            FAIL("expected DataError");
        } catch (const DataError& e) {
            CHECK(std::string(e.what()).find("line 2") != std::string::npos);
        }
    }
    SUBCASE("empty input") {
        CHECK_THROWS_AS(parse_text(""), DataError);
        CHECK_THROWS_AS(parse_text("student_id,skill_id,correct\n"), DataError);
    }
    SUBCASE("bad header") {
        CHECK_THROWS_AS(parse_text("user,skill,ok\nA,3,1\n"), DataError);
    }
}

TEST_CASE("filter removes students with length <= 2 and keeps M") {
    const Dataset ds = parse_text(
        "student_id,skill_id,correct\n"
        "A,1,1\nA,2,0\nA,3,1\nA,1,0\nA,2,1\n"
        "B,1,1\nB,9,0\n"
        "C,2,1\nC,1,0\nC,2,0\n");
    const Dataset kept = filter_short_sequences(ds);
    REQUIRE(kept.student_count() == 2);
    CHECK(kept.sequences[0].student_id == "A");
    CHECK(kept.sequences[1].student_id == "C");
    CHECK(kept.skill_count() == ds.skill_count()); // vocabulary unchanged, "9" still indexed

    SUBCASE("boundary: exactly 3 records are kept") {
        const Dataset three = parse_text("student_id,skill_id,correct\nA,1,1\nA,1,0\nA,1,1\n");
        CHECK(filter_short_sequences(three).student_count() == 1);
    }
    SUBCASE("single-record student yields an empty dataset") {
        const Dataset one = parse_text("student_id,skill_id,correct\nB,1,1\n");
        const Dataset out = filter_short_sequences(one);
        CHECK(out.student_count() == 0);
        CHECK(out.skill_count() == 1);
    }
    SUBCASE("filtering is idempotent") {
        Rng rng(5);
        for (int rep = 0; rep < 10; ++rep) {
            const Dataset d = random_dataset(rng, 20, 6, 6);
            const Dataset once = filter_short_sequences(d);
            CHECK(filter_short_sequences(once) == once);
        }
    }
}

TEST_CASE("split proportions, determinism, and partition") {
    Rng rng(7);
    SUBCASE("N=100 gives 55/15/30") {
        const Dataset ds = random_dataset(rng, 100, 8, 5);
        auto [train, val, test] = split_by_student(ds, {0.55, 0.15, 0.30}, 11);
        CHECK(train.student_count() == 55);
        CHECK(val.student_count() == 15);
        CHECK(test.student_count() == 30);
        CHECK(train.skill_count() == ds.skill_count());
    }
    SUBCASE("same seed twice gives identical membership") {
        const Dataset ds = random_dataset(rng, 40, 8, 5);
        auto [a1, b1, c1] = split_by_student(ds, {0.55, 0.15, 0.30}, 3);
        auto [a2, b2, c2] = split_by_student(ds, {0.55, 0.15, 0.30}, 3);
        CHECK(a1 == a2);
        CHECK(b1 == b2);
        CHECK(c1 == c2);
    }
    SUBCASE("N=7 floors to 3/1/3") {
        const Dataset ds = random_dataset(rng, 7, 4, 4);
        auto [train, val, test] = split_by_student(ds, {0.55, 0.15, 0.30}, 1);
        CHECK(train.student_count() == 3);
        CHECK(val.student_count() == 1);
        CHECK(test.student_count() == 3);
    }
    SUBCASE("fewer than 3 students is an error") {
        const Dataset ds = random_dataset(rng, 2, 4, 4);
        CHECK_THROWS_AS(split_by_student(ds, {0.55, 0.15, 0.30}, 1), DataError);
    }
    SUBCASE("bad ratios are rejected") {
        const Dataset ds = random_dataset(rng, 10, 4, 4);
        CHECK_THROWS_AS(split_by_student(ds, {0.5, 0.15, 0.30}, 1), ConfigError);
    }
    SUBCASE("splits partition the students") {
        for (int rep = 0; rep < 10; ++rep) {
            const Dataset ds = random_dataset(rng, 3 + static_cast<int>(rng.below(50)), 6, 5);
            auto [train, val, test] = split_by_student(ds, {0.55, 0.15, 0.30}, 100 + rep);
            std::vector<std::string> seen;
            for (const auto* part : {&train, &val, &test}) {
                for (const auto& s : part->sequences) {
                    seen.push_back(s.student_id);
                }
            }
            CHECK(seen.size() == ds.student_count());
            std::sort(seen.begin(), seen.end());
            CHECK(std::adjacent_find(seen.begin(), seen.end()) == seen.end());
        }
    }
}

TEST_CASE("windowing") {
    auto one_student = [](int len) {
        std::ostringstream csv;
        csv << "student_id,skill_id,correct\n";
        for (int t = 0; t < len; ++t) {
            csv << "A,sk" << (t % 4) << "," << (t % 2) << "\n";
        }
        return parse_text(csv.str());
    };

    SUBCASE("length 5 with k=9: one window, 5 valid cells") {
        const auto batches = window_sequences(one_student(5), 9, 8);
        REQUIRE(batches.size() == 1);
        REQUIRE(batches[0].batch == 1);
        CHECK(batches[0].lengths[0] == 5);
        for (size_t t = 0; t < 9; ++t) {
            CHECK(batches[0].valid_at(0, t) == (t < 5));
            if (t >= 5) {
                CHECK(batches[0].skill_at(0, t) == 0);
                CHECK(batches[0].correct_at(0, t) == 0);
            }
        }
    }
    SUBCASE("length 20 with k=9 chunks to 9/9/2") {
        const auto rows = flatten_windows(one_student(20), 9);
        REQUIRE(rows.size() == 3);
        CHECK(rows[0].length == 9);
        CHECK(rows[1].length == 9);
        CHECK(rows[2].length == 2);
    }
    SUBCASE("length 3 with k=3: one full window, no padding") {
        const auto rows = flatten_windows(one_student(3), 3);
        REQUIRE(rows.size() == 1);
        CHECK(rows[0].length == 3);
    }
    SUBCASE("batch grouping leaves a smaller last batch") {
        Rng rng(9);
        Dataset ds;
        std::ostringstream csv;
        csv << "student_id,skill_id,correct\n";
        for (int s = 0; s < 7; ++s) {
            for (int t = 0; t < 4; ++t) {
                csv << "u" << s << ",sk1,1\n";
            }
        }
        const auto batches = window_sequences(parse_text(csv.str()), 6, 3);
        REQUIRE(batches.size() == 3);
        CHECK(batches[0].batch == 3);
        CHECK(batches[1].batch == 3);
        CHECK(batches[2].batch == 1);
    }
    SUBCASE("window reconstruction reproduces the original sequence") {
        Rng rng(13);
        for (int rep = 0; rep < 10; ++rep) {
            const Dataset ds = random_dataset(rng, 12, 5, 25);
            const size_t k = 2 + rng.below(9);
            const auto rows = flatten_windows(ds, k);
            size_t row_idx = 0;
            for (const auto& seq : ds.sequences) {
                std::vector<InteractionStep> rebuilt;
                while (rebuilt.size() < seq.length()) {
                    REQUIRE(row_idx < rows.size());
                    const WindowRow& row = rows[row_idx++];
                    for (size_t t = 0; t < row.length; ++t) {
                        rebuilt.push_back(InteractionStep{row.skills[t], row.correct[t]});
                    }
                }
                CHECK(rebuilt == seq.steps);
            }
            CHECK(row_idx == rows.size());
        }
    }
}

TEST_CASE("synthetic generator") {
    SUBCASE("same seed is byte-identical") {
        const Dataset a = generate_synthetic(30, 8, 12, 77);
        const Dataset b = generate_synthetic(30, 8, 12, 77);
        CHECK(a == b);
        CHECK(to_csv(a) == to_csv(b));
        const Dataset c = generate_synthetic(30, 8, 12, 78);
        CHECK(to_csv(a) != to_csv(c));
    }
    SUBCASE("ability forced to +1000 answers everything correctly") {
        SyntheticSpec spec;
        spec.students = 10;
        spec.skills = 5;
        spec.length = 30;
        spec.seed = 5;
        spec.ability_mean = 1000.0;
        spec.ability_std = 0.0;
        const Dataset ds = generate_synthetic(spec);
        for (const auto& seq : ds.sequences) {
            for (const auto& step : seq.steps) {
                CHECK(step.correct == 1);
            }
        }
    }
    SUBCASE("neutral student with no learning hits the 0.5 rate") {
        // Monte Carlo oracle over the generator: sigmoid(0 - 0) = 0.5.
        SyntheticSpec spec;
        spec.students = 100;
        spec.skills = 4;
        spec.length = 100;
        spec.seed = 21;
        spec.ability_std = 0.0;
        spec.difficulty_std = 0.0;
        spec.learn_gain_mean = 0.0;
        spec.learn_gain_std = 0.0;
        const Dataset ds = generate_synthetic(spec);
        size_t correct = 0;
        REQUIRE(ds.record_count() == 10000);
        for (const auto& seq : ds.sequences) {
            for (const auto& step : seq.steps) {
                correct += static_cast<size_t>(step.correct);
            }
        }
        const double rate = static_cast<double>(correct) / 10000.0;
        CHECK(std::abs(rate - 0.5) < 0.02);
    }
    SUBCASE("bad sizes are config errors") {
        CHECK_THROWS_AS(generate_synthetic(0, 3, 3, 1), ConfigError);
        CHECK_THROWS_AS(generate_synthetic(3, 0, 3, 1), ConfigError);
    }
}

TEST_CASE("csv round-trip is exact") {
    Rng rng(17);
    for (int rep = 0; rep < 10; ++rep) {
        const Dataset ds = random_dataset(rng, 15, 6, 8);
        CHECK(parse_text(to_csv(ds)) == ds);
    }
    const Dataset synth = generate_synthetic(25, 7, 9, 3);
    CHECK(parse_text(to_csv(synth)) == synth);
}

TEST_CASE("dataset files and manifests keep split indices aligned") {
    const auto dir = temp_dir("manifest");
    Rng rng(19);
    const Dataset ds = random_dataset(rng, 30, 10, 10);
    auto [train, val, test] = split_by_student(ds, {0.55, 0.15, 0.30}, 4);

    const std::string test_path = (dir / "test.csv").string();
    write_dataset(test, test_path);
    const Dataset reread = read_dataset(test_path);
    CHECK(reread == test); // manifest restores the shared vocabulary
    CHECK(reread.skill_count() == ds.skill_count());

    SUBCASE("checksum mismatch is detected") {
        std::ofstream out(test_path, std::ios::binary | std::ios::app);
        out << "u0,sk0,1\n";
        out.close();
        CHECK_THROWS_AS(read_dataset(test_path), DataError);
    }
    SUBCASE("without a manifest the file parses standalone") {
        const std::string bare = (dir / "bare.csv").string();
        {
            std::ofstream out(bare, std::ios::binary);
            write_csv(test, out);
        }
        const Dataset standalone = read_dataset(bare);
        CHECK(standalone.record_count() == test.record_count());
    }
    std::filesystem::remove_all(dir);
}
