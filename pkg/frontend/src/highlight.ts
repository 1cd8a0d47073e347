/**
 * Token highlighting for the model script grammar, rendered as HTML spans
 * behind a transparent textarea.
 */

const KEYWORDS = new Set(["defineNode", "defineState", "if", "else", "NormalDist", "Discrete", "Continuous", "p"]);

export interface Token {
  kind: "keyword" | "ident" | "number" | "punct" | "space";
  text: string;
}

const TOKEN_RE = /([A-Za-z_][A-Za-z0-9_]*)|(\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)|(\s+)|(==|&&|[(){}|,;:=+\-*])/gy;

export function tokenize(source: string): Token[] {
  const tokens: Token[] = [];
  let pos = 0;
  TOKEN_RE.lastIndex = 0;
  while (pos < source.length) {
    TOKEN_RE.lastIndex = pos;
    const match = TOKEN_RE.exec(source);
    if (!match || match.index !== pos) {
      tokens.push({ kind: "punct", text: source[pos] });
      pos += 1;
      continue;
    }
    const [text, ident, number, space] = match;
    if (ident !== undefined) {
      tokens.push({ kind: KEYWORDS.has(ident) ? "keyword" : "ident", text });
    } else if (number !== undefined) {
      tokens.push({ kind: "number", text });
    } else if (space !== undefined) {
      tokens.push({ kind: "space", text });
    } else {
      tokens.push({ kind: "punct", text });
    }
    pos += text.length;
  }
  return tokens;
}

function escapeHtml(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

/** HTML for the highlight layer; marks `errorLine` (1-based) when given. */
export function highlightHtml(source: string, errorLine: number | null = null): string {
  const lines = source.split("\n");
  return lines
    .map((line, i) => {
      const spans = tokenize(line)
        .map((tok) =>
          tok.kind === "space"
            ? escapeHtml(tok.text)
            : `<span class="tok-${tok.kind}">${escapeHtml(tok.text)}</span>`,
        )
        .join("");
      const cls = errorLine !== null && i + 1 === errorLine ? ' class="error-line"' : "";
      return `<div${cls}>${spans || "&nbsp;"}</div>`;
    })
    .join("");
}
