#include <gtest/gtest.h>
#include <zlib.h>

#include <atomic>
#include <set>

#include "support.hpp"

using namespace corpusforge;
using cftest::Gen;

TEST(Rng, SameSeedSameStream) {
  auto a = Rng::from_seed(42), b = Rng::from_seed(42);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a.next(), b.next());
}

TEST(Rng, DerivedStreamsDiffer) {
  const auto root = Rng::from_seed(1);
  EXPECT_NE(root.derive("a").key(), root.derive("b").key());
  EXPECT_NE(root.derive(std::uint64_t{0}).key(), root.derive(std::uint64_t{1}).key());
  EXPECT_EQ(root.derive("a").derive(std::uint64_t{7}).key(), root.derive("a").derive(std::uint64_t{7}).key());
}

TEST(Rng, BelowStaysInRangeAndCoversIt) {
  auto r = Rng::from_seed(3);
  std::vector<int> hits(7);
  for (int i = 0; i < 7000; ++i) {
    const auto v = r.below(7);
    ASSERT_LT(v, 7u);
    ++hits[v];
  }
  for (int h : hits) EXPECT_GT(h, 800);
}

TEST(Rng, BetweenIsInclusive) {
  auto r = Rng::from_seed(4);
  std::set<std::int64_t> seen;
  for (int i = 0; i < 2000; ++i) {
    const auto v = r.between(-2, 2);
    ASSERT_GE(v, -2);
    ASSERT_LE(v, 2);
    seen.insert(v);
  }
  EXPECT_EQ(seen.size(), 5u);
}

TEST(Rng, UniformMeanAndBernoulliEdges) {
  auto r = Rng::from_seed(5);
  double sum = 0;
  for (int i = 0; i < 100000; ++i) {
    const double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / 100000, 0.5, 0.01);
  for (int i = 0; i < 1000; ++i) {
    ASSERT_FALSE(r.bernoulli(0.0));
    ASSERT_TRUE(r.bernoulli(1.0));
  }
}

TEST(Rng, ShuffleIsAPermutation) {
  Gen g(6);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<int> v(g.below(40));
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<int>(i);
    auto w = v;
    g.rng().shuffle(std::span<int>(w));
    std::sort(w.begin(), w.end());
    ASSERT_EQ(v, w);
  }
}

TEST(Utf8, RoundTripsValidText) {
  Gen g(7);
  for (int i = 0; i < 500; ++i) {
    const auto s = g.sentence();
    ASSERT_TRUE(utf8::valid(s));
    ASSERT_EQ(utf8::encode(utf8::decode(s)), s);
  }
}

TEST(Utf8, InvalidBytesBecomeReplacement) {
  const std::string bad = "a\xC3(b\xF0\x9F";
  EXPECT_FALSE(utf8::valid(bad));
  const auto d = utf8::decode(bad);
  EXPECT_EQ(d[0], U'a');
  EXPECT_EQ(d[1], utf8::kReplacement);
  EXPECT_EQ(std::count(d.begin(), d.end(), utf8::kReplacement), 3);  // one per bad byte
  EXPECT_EQ(utf8::length("día 中"), 5u);
}

TEST(SentencePair, TsvRoundTrip) {
  Gen g(8);
  for (int i = 0; i < 500; ++i) {
    const auto p = g.pair(g.coin());
    const auto line = format_tsv(p);
    ASSERT_EQ(parse_tsv(line), p) << line;
  }
}

TEST(SentencePair, FieldCountRules) {
  EXPECT_THROW(parse_tsv("only one field"), FormatError);
  EXPECT_THROW(parse_tsv("a\tb\tc\td"), FormatError);
  EXPECT_THROW(parse_tsv("a b\tc d", 3), FormatError);
  const auto p = parse_tsv("a b\tc d\t0-1 1-0", 2);
  ASSERT_TRUE(p.alignment);
  EXPECT_EQ(format_tsv(p, 2), "a b\tc d");
  EXPECT_EQ(format_tsv(SentencePair{"x", "y", std::nullopt}, 3), "x\ty\t");
  EXPECT_EQ(parse_tsv("x\ty\r").trg, "y");
}

TEST(SentencePair, AlignmentParsing) {
  EXPECT_EQ(format_alignment(parse_alignment("0-0 2-1  1-3")), "0-0 2-1 1-3");
  EXPECT_TRUE(parse_alignment("").empty());
  for (const char* bad : {"0", "0-", "-1", "a-1", "1-2x", "1--2"}) EXPECT_THROW(parse_alignment(bad), FormatError) << bad;
  EXPECT_THROW(parse_tsv("a b\tc\t2-0"), FormatError);
  EXPECT_THROW(parse_tsv("a b\tc\t0-1"), FormatError);
}

TEST(SentencePair, TokenCountMatchesTokenize) {
  Gen g(9);
  for (int i = 0; i < 300; ++i) {
    std::string s = g.sentence(0, 6);
    if (g.coin()) s = "  " + s + " \t ";
    ASSERT_EQ(token_count(s), tokenize(s).size());
  }
}

TEST(Errors, FormatErrorCarriesLine) {
  const FormatError e("boom", 12);
  EXPECT_EQ(e.line(), 12u);
  EXPECT_STREQ(e.what(), "line 12: boom");
  const PipelineError pe("step", "failed", "oops");
  EXPECT_EQ(pe.step(), "step");
  EXPECT_EQ(pe.stderr_text(), "oops");
}

TEST(Io, LineReaderHandlesCrlfAndMissingNewline) {
  TempDir dir;
  const auto p = dir.path() / "a.txt";
  cftest::write_text(p, "one\r\ntwo\n\nlast");
  const auto lines = read_lines(p);
  EXPECT_EQ(lines, (std::vector<std::string>{"one", "two", "", "last"}));
  EXPECT_EQ(count_lines(p), 4u);
}

TEST(Io, LineReaderReadsGzip) {
  TempDir dir;
  const auto p = dir.path() / "a.tsv.gz";
  gzFile f = gzopen(p.c_str(), "wb");
  const std::string body = "x\ty\nz\tw\n";
  gzwrite(f, body.data(), static_cast<unsigned>(body.size()));
  gzclose(f);
  EXPECT_EQ(read_lines(p), (std::vector<std::string>{"x\ty", "z\tw"}));
}

TEST(Io, LongLinesSurviveBufferBoundaries) {
  TempDir dir;
  const auto p = dir.path() / "long.txt";
  const std::string big(300000, 'q');
  cftest::write_lines(p, {big, "b", big});
  const auto lines = read_lines(p);
  ASSERT_EQ(lines.size(), 3u);
  EXPECT_EQ(lines[0], big);
  EXPECT_EQ(lines[2], big);
}

TEST(Io, MissingFileIsIoError) { EXPECT_THROW(LineReader("/nonexistent/file"), IoError); }

TEST(Io, AtomicWriterLeavesTargetUntilCommit) {
  TempDir dir;
  const auto p = dir.path() / "out.txt";
  cftest::write_text(p, "old\n");
  {
    AtomicFileWriter w(p);
    w.write_line("new");
    EXPECT_EQ(read_file(p), "old\n");
  }
  EXPECT_EQ(read_file(p), "old\n");  // abandoned writer does not clobber
  {
    AtomicFileWriter w(p);
    w.write_line("new");
    w.commit();
  }
  EXPECT_EQ(read_file(p), "new\n");
  std::size_t files = 0;
  for (auto& e : fs::directory_iterator(dir.path())) files += e.is_regular_file();
  EXPECT_EQ(files, 1u);
}

TEST(Io, TempDirIsRemoved) {
  fs::path kept;
  {
    TempDir d;
    kept = d.path();
    cftest::write_text(kept / "f", "x");
    EXPECT_TRUE(fs::exists(kept));
  }
  EXPECT_FALSE(fs::exists(kept));
}

TEST(Io, FingerprintIgnoresLineEndingStyle) {
  TempDir dir;
  cftest::write_text(dir.path() / "a", "x\ny\n");
  cftest::write_text(dir.path() / "b", "x\r\ny");
  cftest::write_text(dir.path() / "c", "x\nz\n");
  const auto a = fingerprint_file(dir.path() / "a");
  const auto b = fingerprint_file(dir.path() / "b");
  EXPECT_EQ(a.lines, 2u);
  EXPECT_EQ(a.sha256, b.sha256);
  EXPECT_NE(a.sha256, fingerprint_file(dir.path() / "c").sha256);
}

TEST(Hash, Sha256KnownVector) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST(Unicode, CaseMappingIsFullUnicode) {
  EXPECT_EQ(unicode::to_upper("straße"), "STRASSE");
  EXPECT_EQ(unicode::to_upper("ǆemal"), "ǄEMAL");
  EXPECT_EQ(unicode::title_case("hello wORLD ǆemal"), "Hello WORLD ǅemal");
  EXPECT_EQ(unicode::case_fold("ΣΑΣ"), unicode::case_fold("σας"));
}

TEST(Unicode, ScriptLookup) {
  EXPECT_EQ(unicode::script_of(U'a'), USCRIPT_LATIN);
  EXPECT_EQ(unicode::script_of(U'ж'), USCRIPT_CYRILLIC);
  EXPECT_EQ(unicode::parse_script_list("Latin, Han").size(), 2u);
  EXPECT_THROW(unicode::parse_script_list("Klingonish"), Error);
}

TEST(Subprocess, RoundTripThroughCat) {
  const auto r = run_process(shell_command("cat"), "hello\nworld\n");
  ASSERT_TRUE(r.ok()) << r.describe();
  EXPECT_EQ(r.out, "hello\nworld\n");
}

TEST(Subprocess, LargeInputDoesNotDeadlock) {
  std::string input;
  for (int i = 0; i < 200000; ++i) input += "line " + std::to_string(i) + "\n";
  const auto r = run_process(shell_command("cat; echo done >&2"), input);
  ASSERT_TRUE(r.ok());
  EXPECT_EQ(r.out, input);
  EXPECT_EQ(r.err, "done\n");
}

TEST(Subprocess, ExitCodeAndStderr) {
  const auto r = run_process(shell_command("echo bad >&2; exit 3"), "");
  EXPECT_FALSE(r.ok());
  EXPECT_EQ(r.exit_code, 3);
  EXPECT_EQ(r.err, "bad\n");
  EXPECT_EQ(r.describe(), "exited with status 3");
}

TEST(Subprocess, EnvironmentAndCwd) {
  TempDir dir;
  ProcessSpec spec = shell_command("printf '%s:' \"$FOO\"; pwd");
  spec.env.emplace_back("FOO", "bar baz");
  spec.cwd = dir.path();
  const auto r = run_process(spec, "");
  ASSERT_TRUE(r.ok());
  EXPECT_EQ(r.out, "bar baz:" + fs::canonical(dir.path()).string() + "\n");
}

TEST(Subprocess, DeadlineKillsTheChild) {
  RunLimits limits;
  limits.deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(200);
  const auto start = std::chrono::steady_clock::now();
  const auto r = run_process(shell_command("sleep 30"), "", limits);
  EXPECT_TRUE(r.timed_out);
  EXPECT_LT(std::chrono::steady_clock::now() - start, std::chrono::seconds(10));
}

TEST(Subprocess, CancelFlagStopsTheChild) {
  std::atomic<bool> cancel{true};
  RunLimits limits;
  limits.cancel = &cancel;
  const auto r = run_process(shell_command("sleep 30"), "", limits);
  EXPECT_TRUE(r.cancelled);
  EXPECT_FALSE(r.ok());
}

TEST(Subprocess, ChildSinkStreams) {
  TempDir dir;
  const auto out = dir.path() / "sink.txt";
  ChildSink sink(shell_command("cat > '" + out.string() + "'"));
  {
    ChildSinkBuf buf(sink);
    std::ostream os(&buf);
    for (int i = 0; i < 10000; ++i) os << i << '\n';
  }
  ASSERT_TRUE(sink.finish().ok());
  EXPECT_EQ(count_lines(out), 10000u);
}

TEST(Layout, DatasetNamesAndPaths) {
  EXPECT_TRUE(layout::valid_dataset_name("news-2019_v1.2"));
  EXPECT_FALSE(layout::valid_dataset_name("../x"));
  EXPECT_FALSE(layout::valid_dataset_name(""));
  EXPECT_EQ(layout::dataset_name("/d/foo.tsv.gz"), "foo");
  EXPECT_EQ(layout::pipeline_path("/d/foo.tsv"), fs::path("/d/foo.filters.json"));
  TempDir dir;
  cftest::make_dataset(dir.path(), "b", 1);
  cftest::make_dataset(dir.path(), "a", 1);
  cftest::write_text(dir.path() / "notes.txt", "");
  const auto list = layout::list_datasets(dir.path());
  ASSERT_EQ(list.size(), 2u);
  EXPECT_EQ(list[0].filename(), "a.tsv");
  EXPECT_EQ(layout::find_dataset(dir.path(), "b"), dir.path() / "b.tsv");
  EXPECT_TRUE(layout::find_dataset(dir.path(), "zzz").empty());
}
