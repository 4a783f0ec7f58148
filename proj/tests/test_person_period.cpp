#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>
#include <tuple>

#include "dynhaz/person_period.hpp"
#include "dynhaz/rng.hpp"
#include "fixtures.hpp"

using namespace dynhaz;
using test::x1;
using test::x2;

namespace {

using RowKey = std::tuple<std::string, int, int, int, int, std::vector<double>>;  // id, y, t, u, snapshot, x

RowKey key(const PersonPeriodRow& r) { return {r.id, r.y, r.t, r.u, r.snapshot_t, r.covariates}; }

std::vector<RowKey> keys(const std::vector<PersonPeriodRow>& rows) {
  std::vector<RowKey> k;
  for (const auto& r : rows) k.push_back(key(r));
  std::sort(k.begin(), k.end());
  return k;
}

// Rows straight from the definitions, without the builders.
std::vector<RowKey> oracle_rows(const GenericDataset& ds, bool baseline) {
  std::vector<RowKey> out;
  for (const auto& s : ds.subjects) {
    for (int t = 0; t < ds.T; ++t) {
      for (int u = t + 1; u <= ds.T; ++u) {
        if (u > s.tau) continue;
        const int snap = baseline ? 0 : t;
        std::vector<double> x;
        for (const auto& path : s.covariates) x.push_back(path.at(static_cast<std::size_t>(snap)));
        out.emplace_back(s.id, s.delta == 1 && u == s.tau ? 1 : 0, t, u, snap, x);
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

GenericDataset random_dataset(Engine& rng) {
  const int n = 1 + static_cast<int>(uniform_index(rng, 15));
  const int maxT = 1 + static_cast<int>(uniform_index(rng, 6));
  const int p = 1 + static_cast<int>(uniform_index(rng, 3));
  std::vector<CovariateSpec> specs;
  for (int k = 0; k < p; ++k) specs.push_back({"V" + std::to_string(k), CovariateKind::TimeVarying});
  std::vector<SubjectRecord> subjects;
  for (int i = 0; i < n; ++i) {
    SubjectRecord s{std::to_string(i), 1 + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(maxT))),
                    static_cast<int>(uniform_index(rng, 2)), {}};
    for (int k = 0; k < p; ++k) {
      std::vector<double> path;
      for (int t = 0; t < s.tau; ++t) path.push_back(static_cast<double>(uniform_index(rng, 5)));  // ties on purpose
      s.covariates.push_back(path);
    }
    subjects.push_back(std::move(s));
  }
  return make_dataset(specs, subjects);
}

}  // namespace

TEST(PersonPeriod, SeparateMatchesTableRows) {
  const auto ds = test::generic_table(3);
  const auto tab = build_separate(ds, 1, 2);
  ASSERT_EQ(tab.size(), 3u);
  EXPECT_EQ(tab.rows[0].id, "1");
  EXPECT_EQ(tab.rows[0].y, 1);
  EXPECT_EQ(tab.rows[0].covariates, (std::vector<double>{x1(1, 1), x2(1)}));
  EXPECT_EQ(tab.rows[1].y, 0);
  EXPECT_EQ(tab.rows[2].y, 0);
  EXPECT_EQ(tab.feature_names(), (std::vector<std::string>{"X1", "X2"}));

  const auto last = build_separate(ds, 3, 4);
  ASSERT_EQ(last.size(), 1u);
  EXPECT_EQ(last.rows[0].id, "2");
}

TEST(PersonPeriod, FirstPeriodIncludesEveryone) {
  EXPECT_EQ(build_separate(test::generic_table(), 0, 1).size(), 10u);
}

TEST(PersonPeriod, SeparateRejectsBadCells) {
  const auto ds = test::generic_table();
  EXPECT_THROW(build_separate(ds, 2, 2), std::invalid_argument);
  EXPECT_THROW(build_separate(ds, -1, 1), std::invalid_argument);
  EXPECT_THROW(build_separate(ds, 0, 5), EmptyRiskSetError);
}

TEST(PersonPeriod, PooltRows) {
  const auto ds = test::generic_table(3);
  const auto t0 = build_poolt(ds, 0);
  ASSERT_EQ(t0.size(), 9u);
  const auto& golden = test::golden_rows();
  for (std::size_t i = 0; i < 9; ++i) {
    EXPECT_EQ(t0.rows[i].id, std::to_string(golden[i].id));
    EXPECT_EQ(t0.rows[i].u, golden[i].u);
    EXPECT_EQ(t0.rows[i].y, golden[i].y);
  }
  EXPECT_EQ(build_poolt(ds, 1).size(), 6u);
  EXPECT_EQ(t0.feature_names(), (std::vector<std::string>{"X1", "X2", "u"}));
  const auto& r = t0.rows[3];
  EXPECT_EQ(t0.features(r), (std::vector<double>{x1(1, 0), x2(1), 2}));
}

TEST(PersonPeriod, PooltAtLastTimeIsSeparatePlusU) {
  const auto ds = test::generic_table();
  const auto p = build_poolt(ds, ds.T - 1);
  const auto s = build_separate(ds, ds.T - 1, ds.T);
  ASSERT_EQ(p.size(), s.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    EXPECT_EQ(key(p.rows[i]), key(s.rows[i]));
    EXPECT_EQ(p.features(p.rows[i]).back(), ds.T);
  }
}

TEST(PersonPeriod, SuperppRowCountsPerSubject) {
  const auto ds = test::generic_table();
  const auto tab = build_superpp(ds);
  EXPECT_EQ(tab.feature_names(), (std::vector<std::string>{"X1", "X2", "u", "t"}));
  for (const auto& s : ds.subjects) {
    const auto c = std::count_if(tab.rows.begin(), tab.rows.end(), [&](const auto& r) { return r.id == s.id; });
    EXPECT_EQ(c, s.tau * (s.tau + 1) / 2) << "subject " << s.id;
  }
  const auto sub = build_superpp(test::generic_table(3));
  EXPECT_EQ(sub.size(), 19u);
}

TEST(PersonPeriod, SuperppWithSinglePeriod) {
  const auto ds = make_dataset({{"A", CovariateKind::TimeVarying}}, {{"a", 1, 1, {{0.5}}}, {"b", 1, 0, {{1.5}}}});
  const auto tab = build_superpp(ds);
  ASSERT_EQ(tab.size(), 2u);
  for (const auto& r : tab.rows) {
    EXPECT_EQ(r.t, 0);
    EXPECT_EQ(r.u, 1);
  }
}

TEST(PersonPeriod, Superpp0UsesBaseline) {
  const auto ds = test::generic_table(3);
  const auto tab = build_superpp0(ds);
  const auto it = std::find_if(tab.rows.begin(), tab.rows.end(), [](const auto& r) { return r.id == "1" && r.t == 1; });
  ASSERT_NE(it, tab.rows.end());
  EXPECT_EQ(it->y, 1);
  EXPECT_EQ(it->u, 2);
  EXPECT_EQ(it->covariates, (std::vector<double>{x1(1, 0), x2(1)}));
  EXPECT_EQ(tab.feature_names(), (std::vector<std::string>{"X1", "X2", "u", "t"}));
  EXPECT_EQ(build_superpp0(ds, false).feature_names(), (std::vector<std::string>{"X1", "X2", "u"}));
}

TEST(PersonPeriod, Superpp0EqualsSuperppWhenNothingVaries) {
  auto ds = make_dataset({{"A", CovariateKind::TimeInvariant}},
                         {{"a", 3, 1, {{1, 1, 1}}}, {"b", 2, 0, {{2, 2}}}, {"c", 3, 0, {{3, 3, 3}}}});
  const auto a = build_superpp(ds), b = build_superpp0(ds);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a.rows[i].covariates, b.rows[i].covariates);
    EXPECT_EQ(a.rows[i].y, b.rows[i].y);
  }
}

// The builders agree with the definitions and with each other on random
// datasets: superpp = union of poolt = union of separate, superpp0 has the
// same (id, y, t, u) multiset, y = 1 only at an observed event time.
TEST(PersonPeriod, DecompositionProperty) {
  Engine rng(derive_seed(7, {1}));
  for (int trial = 0; trial < 300; ++trial) {
    const auto ds = random_dataset(rng);
    const auto super = build_superpp(ds);
    EXPECT_EQ(keys(super.rows), oracle_rows(ds, false));
    EXPECT_EQ(keys(build_superpp0(ds).rows), oracle_rows(ds, true));

    std::vector<PersonPeriodRow> pooled, separate;
    for (int t = 0; t < ds.T; ++t) {
      try {
        const auto p = build_poolt(ds, t);
        pooled.insert(pooled.end(), p.rows.begin(), p.rows.end());
      } catch (const EmptyRiskSetError&) {
      }
      for (int u = t + 1; u <= ds.T; ++u) {
        try {
          const auto s = build_separate(ds, t, u);
          separate.insert(separate.end(), s.rows.begin(), s.rows.end());
        } catch (const EmptyRiskSetError&) {
        }
      }
    }
    EXPECT_EQ(keys(pooled), keys(super.rows));
    EXPECT_EQ(keys(separate), keys(super.rows));

    // Ordered by (t, u, subject position).
    for (std::size_t i = 1; i < super.size(); ++i) {
      const auto& a = super.rows[i - 1];
      const auto& b = super.rows[i];
      EXPECT_LT(std::tie(a.t, a.u, a.subject), std::tie(b.t, b.u, b.subject));
    }
    for (const auto& r : super.rows) {
      const auto& s = ds.subjects[r.subject];
      EXPECT_LT(r.snapshot_t, s.tau);
      EXPECT_LT(r.t, r.u);
      if (s.delta == 0) {
        EXPECT_EQ(r.y, 0);
      }
    }
  }
}

TEST(PersonPeriod, WriteTableCsv) {
  std::ostringstream out;
  write_table(out, build_separate(test::generic_table(3), 3, 4));
  EXPECT_EQ(out.str(), "id,y,t,u,X1,X2\n2,1,3,4,23,1002\n");
}
