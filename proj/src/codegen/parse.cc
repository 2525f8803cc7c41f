/*
 * Copyright 2026 The obdistill Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Line-oriented recursive-descent parser for tree programs.

#include <charconv>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "obdistill/codegen.h"
#include "obdistill/error.h"

namespace obdistill {
namespace {

enum class TokenKind { kName, kNumber, kString, kOp };

struct Token {
  TokenKind kind;
  std::string text;
  std::size_t column;  // 1-based
  double number = 0.0;
};

struct Line {
  std::size_t number;  // 1-based
  std::size_t indent;
  std::vector<Token> tokens;
};

[[noreturn]] void Fail(ErrorCode code, std::size_t line, std::size_t column,
                       const std::string& what) {
  throw Error(code, "line " + std::to_string(line) + ", column " +
                        std::to_string(column) + ": " + what);
}

bool IsNameStart(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
}
bool IsNameChar(char c) { return IsNameStart(c) || (c >= '0' && c <= '9'); }
bool IsDigit(char c) { return c >= '0' && c <= '9'; }

std::vector<Line> Tokenize(std::string_view text) {
  std::vector<Line> lines;
  std::size_t number = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view raw = text.substr(start, end - start);
    if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);
    ++number;
    start = end + 1;

    Line line{number, 0, {}};
    std::size_t i = 0;
    while (i < raw.size() && (raw[i] == ' ' || raw[i] == '\t')) {
      if (raw[i] == '\t') {
        Fail(ErrorCode::kSyntaxError, number, i + 1,
             "tabs are not allowed for indentation");
      }
      ++i;
    }
    line.indent = i;
    while (i < raw.size()) {
      const char c = raw[i];
      const std::size_t column = i + 1;
      if (c == ' ' || c == '\t') {
        ++i;
      } else if (c == '#') {
        break;
      } else if (IsNameStart(c)) {
        std::size_t j = i;
        for (;;) {
          while (j < raw.size() && IsNameChar(raw[j])) ++j;
          if (j + 1 < raw.size() && raw[j] == '.' && IsNameStart(raw[j + 1])) {
            ++j;
            continue;
          }
          break;
        }
        line.tokens.push_back(
            {TokenKind::kName, std::string(raw.substr(i, j - i)), column});
        i = j;
      } else if (IsDigit(c) || (c == '.' && i + 1 < raw.size() &&
                                IsDigit(raw[i + 1]))) {
        double value = 0.0;
        const auto result = std::from_chars(raw.data() + i,
                                            raw.data() + raw.size(), value);
        if (result.ec != std::errc()) {
          Fail(ErrorCode::kSyntaxError, number, column, "malformed number");
        }
        const std::size_t j = static_cast<std::size_t>(result.ptr - raw.data());
        if (j < raw.size() && (IsNameChar(raw[j]) || raw[j] == '.')) {
          Fail(ErrorCode::kSyntaxError, number, column, "malformed number");
        }
        line.tokens.push_back({TokenKind::kNumber,
                               std::string(raw.substr(i, j - i)), column, value});
        i = j;
      } else if (c == '"' || c == '\'') {
        std::string value;
        std::size_t j = i + 1;
        for (; j < raw.size() && raw[j] != c; ++j) {
          if (raw[j] == '\\' && j + 1 < raw.size()) ++j;
          value += raw[j];
        }
        if (j >= raw.size()) {
          Fail(ErrorCode::kSyntaxError, number, column, "unterminated string");
        }
        line.tokens.push_back({TokenKind::kString, value, column});
        i = j + 1;
      } else {
        static const char* const kOps[] = {"<=", ">=", "==", "!=", "<", ">",
                                           "-",  "+",  "(",  ")",  ":", ",",
                                           "[",  "]"};
        bool matched = false;
        for (const char* op : kOps) {
          const std::string_view o(op);
          if (raw.substr(i, o.size()) == o) {
            if (o == "==" || o == "!=") {
              Fail(ErrorCode::kSyntaxError, number, column,
                   "comparator " + std::string(o) + " is not supported");
            }
            line.tokens.push_back({TokenKind::kOp, std::string(o), column});
            i += o.size();
            matched = true;
            break;
          }
        }
        if (!matched) {
          Fail(ErrorCode::kSyntaxError, number, column,
               std::string("unexpected character '") + c + "'");
        }
      }
    }
    if (!line.tokens.empty()) lines.push_back(std::move(line));
    if (end == text.size()) break;
  }
  return lines;
}

// Statements before desugaring.
struct Stmt;
using Block = std::vector<Stmt>;

struct ReturnValue {
  std::optional<Action> action;
  std::string call;  // function continued in, if any
  std::size_t call_args = 0;
};

struct Arm {
  Condition condition;
  Block body;
};

struct Stmt {
  std::size_t line = 0;
  std::size_t column = 0;
  // Either a return, or an if/elif/else chain.
  std::optional<ReturnValue> ret;
  std::vector<Arm> arms;
  std::optional<Block> otherwise;
};

struct Function {
  std::string name;
  std::size_t line = 0;
  std::size_t column = 0;
  std::size_t params = 0;
  Block body;
};

class Parser {
 public:
  Parser(std::vector<Line> lines, const std::vector<std::string>& names,
         const ActionSpec& spec)
      : lines_(std::move(lines)), names_(names), spec_(spec) {}

  std::vector<Function> ParseFile() {
    std::vector<Function> functions;
    if (lines_.empty()) {
      Fail(ErrorCode::kSyntaxError, 1, 1, "empty program");
    }
    while (line_ < lines_.size()) {
      const Line& l = lines_[line_];
      if (l.indent != 0) {
        Fail(ErrorCode::kSyntaxError, l.number, l.indent + 1,
             "unexpected indent");
      }
      functions.push_back(ParseFunction());
    }
    return functions;
  }

 private:
  // Token cursor over the current line.
  const Line& line() const { return lines_[line_]; }
  bool AtEnd() const { return tok_ >= line().tokens.size(); }
  const Token& Peek() const { return line().tokens[tok_]; }
  std::size_t Column() const {
    if (!AtEnd()) return Peek().column;
    const Token& last = line().tokens.back();
    return last.column + last.text.size();
  }
  [[noreturn]] void SyntaxError(const std::string& what) const {
    Fail(ErrorCode::kSyntaxError, line().number, Column(), what);
  }
  bool PeekOp(std::string_view op) const {
    return !AtEnd() && Peek().kind == TokenKind::kOp && Peek().text == op;
  }
  bool PeekName(std::string_view name) const {
    return !AtEnd() && Peek().kind == TokenKind::kName && Peek().text == name;
  }
  void ExpectOp(std::string_view op) {
    if (!PeekOp(op)) SyntaxError("expected '" + std::string(op) + "'");
    ++tok_;
  }
  const Token& ExpectName() {
    if (AtEnd() || Peek().kind != TokenKind::kName) {
      SyntaxError("expected a name");
    }
    return line().tokens[tok_++];
  }
  void ExpectLineEnd() {
    if (!AtEnd()) SyntaxError("unexpected '" + Peek().text + "'");
  }
  void NextLine() {
    ++line_;
    tok_ = 0;
  }

  Function ParseFunction() {
    Function f;
    f.line = line().number;
    f.column = Column();
    if (!PeekName("def")) SyntaxError("expected 'def'");
    ++tok_;
    f.name = ExpectName().text;
    ExpectOp("(");
    if (!PeekOp(")")) {
      for (;;) {
        ExpectName();
        ++f.params;
        if (!PeekOp(",")) break;
        ++tok_;
      }
    }
    ExpectOp(")");
    ExpectOp(":");
    ExpectLineEnd();
    const std::size_t indent = line().indent;
    NextLine();
    f.body = ParseBlock(indent);
    return f;
  }

  // Lines indented deeper than `parent`, all at the indentation of the first.
  Block ParseBlock(std::size_t parent) {
    if (line_ >= lines_.size() || line().indent <= parent) {
      if (line_ >= lines_.size()) {
        const Line& last = lines_.back();
        Fail(ErrorCode::kSyntaxError, last.number + 1, 1,
             "expected an indented block");
      }
      Fail(ErrorCode::kSyntaxError, line().number, line().indent + 1,
           "expected an indented block");
    }
    const std::size_t indent = line().indent;
    Block block;
    while (line_ < lines_.size() && line().indent > parent) {
      if (line().indent != indent) {
        Fail(ErrorCode::kSyntaxError, line().number, line().indent + 1,
             "inconsistent indentation");
      }
      block.push_back(ParseStatement(indent));
    }
    return block;
  }

  // A body after ':' on the same line, or an indented block below.
  Block ParseSuite(std::size_t indent) {
    if (!AtEnd()) {
      Block block;
      block.push_back(ParseSimple());
      NextLine();
      return block;
    }
    NextLine();
    return ParseBlock(indent);
  }

  Stmt ParseSimple() {
    Stmt s;
    s.line = line().number;
    s.column = Column();
    if (!PeekName("return")) SyntaxError("expected 'return'");
    ++tok_;
    s.ret = ParseReturnValue();
    ExpectLineEnd();
    return s;
  }

  Stmt ParseStatement(std::size_t indent) {
    if (PeekName("return")) {
      Stmt s = ParseSimple();
      NextLine();
      return s;
    }
    if (PeekName("pass")) SyntaxError("'pass' is not supported");
    if (!PeekName("if")) {
      if (PeekName("elif") || PeekName("else")) {
        SyntaxError("'" + Peek().text + "' without a matching 'if'");
      }
      SyntaxError("expected 'if' or 'return'");
    }
    Stmt s;
    s.line = line().number;
    s.column = Column();
    ++tok_;
    {
      Condition c = ParseCondition();
      ExpectOp(":");
      s.arms.push_back({c, ParseSuite(indent)});
    }
    while (line_ < lines_.size() && line().indent == indent &&
           PeekName("elif")) {
      ++tok_;
      Condition c = ParseCondition();
      ExpectOp(":");
      s.arms.push_back({c, ParseSuite(indent)});
    }
    if (line_ < lines_.size() && line().indent == indent && PeekName("else")) {
      ++tok_;
      ExpectOp(":");
      s.otherwise = ParseSuite(indent);
    }
    return s;
  }

  struct Side {
    std::optional<FeatureExpr> expr;
    double literal = 0.0;
    std::size_t column = 0;
  };

  std::size_t Feature(const Token& t) const {
    for (std::size_t i = 0; i < names_.size(); ++i) {
      if (names_[i] == t.text) return i;
    }
    Fail(ErrorCode::kUnknownFeatureName, line().number, t.column,
         "unknown feature \"" + t.text + "\"");
  }

  Side ParseSide() {
    Side side;
    side.column = Column();
    if (PeekOp("-") || PeekOp("+")) {
      const bool negative = Peek().text == "-";
      ++tok_;
      if (AtEnd() || Peek().kind != TokenKind::kNumber) {
        SyntaxError("expected a number");
      }
      side.literal = negative ? -Peek().number : Peek().number;
      ++tok_;
      return side;
    }
    if (!AtEnd() && Peek().kind == TokenKind::kNumber) {
      side.literal = Peek().number;
      ++tok_;
      return side;
    }
    if (AtEnd() || Peek().kind != TokenKind::kName) {
      SyntaxError("expected a feature or a number");
    }
    side.expr = FeatureExpr{Feature(line().tokens[tok_++]), std::nullopt};
    if (PeekOp("-") && tok_ + 1 < line().tokens.size() &&
        line().tokens[tok_ + 1].kind == TokenKind::kName) {
      ++tok_;
      const Token& rhs = line().tokens[tok_++];
      side.expr->rhs = Feature(rhs);
      if (*side.expr->rhs == side.expr->lhs) {
        Fail(ErrorCode::kSyntaxError, line().number, rhs.column,
             "a feature minus itself is constant");
      }
    }
    return side;
  }

  Condition ParseCondition() {
    const Side left = ParseSide();
    if (AtEnd() || Peek().kind != TokenKind::kOp) {
      SyntaxError("expected a comparator");
    }
    Comparator op;
    const std::string& text = Peek().text;
    if (text == "<=") {
      op = Comparator::kLe;
    } else if (text == "<") {
      op = Comparator::kLt;
    } else if (text == ">") {
      op = Comparator::kGt;
    } else if (text == ">=") {
      op = Comparator::kGe;
    } else {
      SyntaxError("expected a comparator");
    }
    ++tok_;
    const Side right = ParseSide();
    if (left.expr && !right.expr) return {*left.expr, op, right.literal};
    if (!left.expr && right.expr) {
      // c op e  <=>  e mirrored-op c
      static constexpr Comparator kMirror[] = {Comparator::kGe, Comparator::kGt,
                                               Comparator::kLt, Comparator::kLe};
      return {*right.expr, kMirror[static_cast<int>(op)], left.literal};
    }
    if (left.expr && right.expr) {
      if (left.expr->rhs || right.expr->rhs) {
        Fail(ErrorCode::kSyntaxError, line().number, right.column,
             "only one feature difference per condition");
      }
      if (left.expr->lhs == right.expr->lhs) {
        Fail(ErrorCode::kSyntaxError, line().number, right.column,
             "a feature compared with itself is constant");
      }
      return {FeatureExpr{left.expr->lhs, right.expr->lhs}, op, 0.0};
    }
    Fail(ErrorCode::kSyntaxError, line().number, left.column,
         "condition must involve a feature");
  }

  ReturnValue ParseReturnValue() {
    ReturnValue r;
    const std::size_t column = Column();
    if (AtEnd()) SyntaxError("expected a return value");
    const Token& t = Peek();
    if (t.kind == TokenKind::kString) {
      ++tok_;
      if (!spec_.is_discrete()) {
        Fail(ErrorCode::kUnknownActionName, line().number, column,
             "action names need a discrete action space");
      }
      auto index = spec_.FindAction(t.text);
      if (!index) {
        Fail(ErrorCode::kUnknownActionName, line().number, column,
             "unknown action \"" + t.text + "\"");
      }
      r.action = *index;
      return r;
    }
    if (PeekOp("[")) {
      ++tok_;
      ContinuousAction values;
      if (!PeekOp("]")) {
        for (;;) {
          double sign = 1.0;
          if (PeekOp("-") || PeekOp("+")) {
            sign = Peek().text == "-" ? -1.0 : 1.0;
            ++tok_;
          }
          if (AtEnd() || Peek().kind != TokenKind::kNumber) {
            SyntaxError("expected a number");
          }
          values.push_back(sign * Peek().number);
          ++tok_;
          if (!PeekOp(",")) break;
          ++tok_;
        }
      }
      ExpectOp("]");
      Action a = values;
      try {
        spec_.ValidateAction(a);
      } catch (const Error& e) {
        Fail(ErrorCode::kSyntaxError, line().number, column,
             std::string("invalid action: ") + e.what());
      }
      r.action = std::move(a);
      return r;
    }
    if (t.kind == TokenKind::kName) {
      r.call = t.text;
      ++tok_;
      ExpectOp("(");
      if (!PeekOp(")")) {
        for (;;) {
          ExpectName();
          ++r.call_args;
          if (!PeekOp(",")) break;
          ++tok_;
        }
      }
      ExpectOp(")");
      return r;
    }
    SyntaxError("expected an action name, a vector or a call");
  }

  std::vector<Line> lines_;
  const std::vector<std::string>& names_;
  const ActionSpec& spec_;
  std::size_t line_ = 0;
  std::size_t tok_ = 0;
};

// Turns statement lists into a program tree. A block that can fall off its
// end continues with `next`, the statements following it.
class Builder {
 public:
  explicit Builder(const std::vector<Function>& functions)
      : functions_(functions) {
    for (std::size_t i = 0; i < functions_.size(); ++i) {
      if (!by_name_.emplace(functions_[i].name, i).second) {
        Fail(ErrorCode::kSyntaxError, functions_[i].line, functions_[i].column,
             "function \"" + functions_[i].name + "\" defined twice");
      }
    }
  }

  ProgramNodePtr Entry() {
    auto it = by_name_.find("play");
    return Call(it != by_name_.end() ? it->second : 0);
  }

 private:
  ProgramNodePtr Call(std::size_t index) {
    if (auto it = done_.find(index); it != done_.end()) return it->second;
    const Function& f = functions_[index];
    if (!active_.insert(index).second) {
      Fail(ErrorCode::kSyntaxError, f.line, f.column,
           "function \"" + f.name + "\" calls itself");
    }
    ProgramNodePtr out = BuildBlock(f.body, 0, nullptr, f);
    active_.erase(index);
    done_.emplace(index, out);
    return out;
  }

  ProgramNodePtr BuildBlock(const Block& block, std::size_t i,
                            ProgramNodePtr next, const Function& f) {
    if (i == block.size()) {
      if (!next) {
        const Stmt& last = block.back();
        Fail(ErrorCode::kSyntaxError, last.line, last.column,
             "\"" + f.name + "\" can end without returning an action");
      }
      return next;
    }
    const Stmt& s = block[i];
    if (s.ret) return Return(*s.ret, s);
    // The rest of this block, or the enclosing continuation.
    ProgramNodePtr rest =
        i + 1 < block.size() ? BuildBlock(block, i + 1, next, f) : next;
    ProgramNodePtr otherwise =
        s.otherwise ? BuildBlock(*s.otherwise, 0, rest, f) : rest;
    if (!otherwise) {
      Fail(ErrorCode::kSyntaxError, s.line, s.column,
           "\"" + f.name + "\" can end without returning an action");
    }
    for (std::size_t a = s.arms.size(); a-- > 0;) {
      otherwise = MakeIf(s.arms[a].condition,
                         BuildBlock(s.arms[a].body, 0, rest, f), otherwise);
    }
    return otherwise;
  }

  ProgramNodePtr Return(const ReturnValue& r, const Stmt& s) {
    if (r.action) return MakeReturn(*r.action);
    auto it = by_name_.find(r.call);
    if (it == by_name_.end()) {
      Fail(ErrorCode::kSyntaxError, s.line, s.column,
           "unknown function \"" + r.call + "\"");
    }
    const Function& callee = functions_[it->second];
    if (callee.params != r.call_args) {
      Fail(ErrorCode::kNameArityMismatch, s.line, s.column,
           "\"" + callee.name + "\" takes " + std::to_string(callee.params) +
               " arguments, got " + std::to_string(r.call_args));
    }
    return Call(it->second);
  }

  const std::vector<Function>& functions_;
  std::map<std::string, std::size_t> by_name_;
  std::map<std::size_t, ProgramNodePtr> done_;
  std::set<std::size_t> active_;
};

}  // namespace

Program ParseProgram(std::string_view text,
                     const std::vector<std::string>& feature_names,
                     const ActionSpec& action_spec) {
  Parser parser(Tokenize(text), feature_names, action_spec);
  const std::vector<Function> functions = parser.ParseFile();
  Builder builder(functions);
  return Program(feature_names, action_spec, builder.Entry());
}

}  // namespace obdistill
