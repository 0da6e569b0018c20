// Small syntax highlighter for the source view: splits code into typed
// tokens (comment, string, number, keyword, identifier, punctuation)
// that the DOM layer wraps in styled spans. Language-agnostic keyword
// set covering the C-family languages traces typically reference.

export type TokenKind =
  | "comment"
  | "string"
  | "number"
  | "keyword"
  | "identifier"
  | "space"
  | "punct";

export interface Token {
  kind: TokenKind;
  text: string;
}

const KEYWORDS = new Set([
  "auto", "bool", "break", "case", "catch", "char", "class", "const",
  "continue", "def", "default", "do", "double", "else", "enum", "extern",
  "float", "for", "goto", "if", "import", "in", "inline", "int", "lambda",
  "long", "namespace", "new", "nullptr", "private", "public", "return",
  "short", "signed", "sizeof", "static", "struct", "switch", "template",
  "this", "throw", "try", "typedef", "typename", "union", "unsigned",
  "using", "virtual", "void", "volatile", "while",
]);

const PATTERNS: [TokenKind, RegExp][] = [
  ["comment", /^(\/\/[^\n]*|\/\*[\s\S]*?\*\/|#[^\n]*)/],
  ["string", /^("(?:[^"\\\n]|\\.)*"|'(?:[^'\\\n]|\\.)*')/],
  ["number", /^(\d+\.?\d*(?:[eE][+-]?\d+)?)/],
  ["identifier", /^([A-Za-z_][A-Za-z0-9_]*)/],
  ["space", /^(\s+)/],
];

export function tokenize(text: string): Token[] {
  const tokens: Token[] = [];
  let rest = text;
  while (rest.length > 0) {
    let matched = false;
    for (const [kind, pattern] of PATTERNS) {
      const m = pattern.exec(rest);
      if (m !== null) {
        const tokText = m[1];
        const resolved: TokenKind =
          kind === "identifier" && KEYWORDS.has(tokText) ? "keyword" : kind;
        tokens.push({ kind: resolved, text: tokText });
        rest = rest.slice(tokText.length);
        matched = true;
        break;
      }
    }
    if (!matched) {
      tokens.push({ kind: "punct", text: rest[0] });
      rest = rest.slice(1);
    }
  }
  return tokens;
}
