#include <gtest/gtest.h>

#include "dprom/config.hpp"
#include "dprom/scenario.hpp"

using namespace dprom;

TEST(ConfigParser, ReadsSectionsKeysAndComments) {
  ConfigFile c = ConfigFile::parse(
      "# leading comment\n"
      "[alpha]\n"
      "x = 1.5\n"
      "name = beam  \n"
      "flag = true\n"
      "list = 1, 2.5, -3\n"
      "\n"
      "[beta]\n"
      "x = 2\n",
      "inline");
  EXPECT_TRUE(c.has_section("alpha"));
  EXPECT_TRUE(c.has("alpha", "x"));
  EXPECT_FALSE(c.has("alpha", "missing"));
  EXPECT_EQ(c.get_double("alpha", "x"), 1.5);
  EXPECT_EQ(c.get_string("alpha", "name"), "beam");
  EXPECT_TRUE(c.get_bool_or("alpha", "flag", false));
  const std::vector<double> l = c.get_double_list("alpha", "list");
  ASSERT_EQ(l.size(), 3u);
  EXPECT_EQ(l[1], 2.5);
  EXPECT_EQ(c.get_double("beta", "x"), 2.0);
}

TEST(ConfigParser, RejectsMalformedInput) {
  // Duplicate keys are silent config rot; refuse them outright.
  EXPECT_THROW(ConfigFile::parse("[a]\nx = 1\nx = 2\n", "dup"), ConfigError);
  // A key before any section has no home.
  EXPECT_THROW(ConfigFile::parse("x = 1\n", "nosec"), ConfigError);
  // Lines that are neither comments, sections, nor assignments.
  EXPECT_THROW(ConfigFile::parse("[a]\nwibble\n", "junk"), ConfigError);
  // Missing values for typed getters.
  ConfigFile c = ConfigFile::parse("[a]\nx = word\n", "types");
  EXPECT_THROW(c.get_double("a", "x"), ConfigError);
  EXPECT_THROW(c.get_double("a", "absent"), ConfigError);
}

TEST(ConfigParser, TracksConsumptionForStrictValidation) {
  // Everything a loader does not touch must be reported; typos in an input
  // deck should fail loudly instead of silently using defaults.
  ConfigFile c = ConfigFile::parse("[a]\nx = 1\ny = 2\n[b]\nz = 3\n", "t");
  c.get_double("a", "x");
  // Unconsumed key y and unknown section b must both be flagged.
  try {
    c.check_consumed({"a"});
    FAIL() << "expected a validation error";
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("y"), std::string::npos);
    EXPECT_NE(msg.find("b"), std::string::npos);
  }
  c.get_double("a", "y");
  EXPECT_THROW(c.check_consumed({"a", "b"}), ConfigError);  // z unread
  c.get_double("b", "z");
  EXPECT_NO_THROW(c.check_consumed({"a", "b"}));
}

TEST(ConfigParser, CanonicalTextIsStableUnderFormatting) {
  // The hashes that key snapshot reuse come from the canonical form, so
  // whitespace and comment edits must not change it.
  ConfigFile a = ConfigFile::parse("[s]\nk = 1\n# note\nj = 2\n", "a");
  ConfigFile b = ConfigFile::parse("\n[s]\n\nk =   1\nj=2\n", "b");
  EXPECT_EQ(a.canonical_text(), b.canonical_text());
  ConfigFile c = ConfigFile::parse("[s]\nk = 2\nj = 2\n", "c");
  EXPECT_NE(a.canonical_text(), c.canonical_text());
  EXPECT_EQ(fnv1a_hex(a.canonical_text()), fnv1a_hex(b.canonical_text()));
}

TEST(ModelSpecParser, AcceptsVariantsAndCorrections) {
  EXPECT_EQ(parse_model_spec("N1").variant, Variant::N1);
  EXPECT_FALSE(parse_model_spec("N1").volume_correction);
  EXPECT_EQ(parse_model_spec("N1t").variant, Variant::N1t);
  EXPECT_EQ(parse_model_spec("N0-v").variant, Variant::N0);
  EXPECT_TRUE(parse_model_spec("N0-v").volume_correction);
  EXPECT_EQ(to_string(parse_model_spec("N1t-v")), "N1t-v");
  EXPECT_THROW(parse_model_spec("N2"), ConfigError);
  EXPECT_THROW(parse_model_spec("Exact-v"), ConfigError);
}
