// Minimal strict XML reader for the PSV dialect: elements with attributes
// only, no text content, no namespaces. Small enough to behave identically
// in the browser and under node, which keeps the test suite DOM-free.

export interface XmlElement {
  tag: string;
  attrs: Map<string, string>;
  children: XmlElement[];
}

export class XmlError extends Error {}

const NAME_RE = /[A-Za-z_][A-Za-z0-9_.-]*/y;
const SPACE_RE = /\s*/y;

export function readXml(text: string): XmlElement {
  const reader = new Reader(text);
  reader.skipProlog();
  const root = reader.readElement();
  reader.skipMisc();
  if (!reader.atEnd()) {
    throw new XmlError(`trailing content at offset ${reader.pos}`);
  }
  return root;
}

class Reader {
  pos = 0;

  constructor(private readonly text: string) {}

  atEnd(): boolean {
    return this.pos >= this.text.length;
  }

  skipSpace(): void {
    SPACE_RE.lastIndex = this.pos;
    const m = SPACE_RE.exec(this.text);
    if (m) this.pos += m[0].length;
  }

  skipProlog(): void {
    this.skipSpace();
    if (this.text.startsWith("<?xml", this.pos)) {
      const end = this.text.indexOf("?>", this.pos);
      if (end < 0) throw new XmlError("unterminated XML declaration");
      this.pos = end + 2;
    }
    this.skipMisc();
  }

  skipMisc(): void {
    for (;;) {
      this.skipSpace();
      if (this.text.startsWith("<!--", this.pos)) {
        const end = this.text.indexOf("-->", this.pos);
        if (end < 0) throw new XmlError("unterminated comment");
        this.pos = end + 3;
        continue;
      }
      return;
    }
  }

  readName(): string {
    NAME_RE.lastIndex = this.pos;
    const m = NAME_RE.exec(this.text);
    if (!m) throw new XmlError(`expected a name at offset ${this.pos}`);
    this.pos += m[0].length;
    return m[0];
  }

  expect(what: string): void {
    if (!this.text.startsWith(what, this.pos)) {
      throw new XmlError(`expected ${JSON.stringify(what)} at offset ${this.pos}`);
    }
    this.pos += what.length;
  }

  readElement(): XmlElement {
    this.expect("<");
    const tag = this.readName();
    const attrs = new Map<string, string>();
    for (;;) {
      this.skipSpace();
      const ch = this.text[this.pos];
      if (ch === "/") {
        this.expect("/>");
        return { tag, attrs, children: [] };
      }
      if (ch === ">") {
        this.pos += 1;
        return { tag, attrs, children: this.readChildren(tag) };
      }
      const name = this.readName();
      this.skipSpace();
      this.expect("=");
      this.skipSpace();
      this.expect('"');
      const end = this.text.indexOf('"', this.pos);
      if (end < 0) throw new XmlError(`unterminated attribute ${name}`);
      if (attrs.has(name)) throw new XmlError(`duplicate attribute ${name}`);
      attrs.set(name, unescapeAttr(this.text.slice(this.pos, end)));
      this.pos = end + 1;
    }
  }

  readChildren(tag: string): XmlElement[] {
    const children: XmlElement[] = [];
    for (;;) {
      this.skipMisc();
      if (this.text.startsWith("</", this.pos)) {
        this.pos += 2;
        const closing = this.readName();
        if (closing !== tag) {
          throw new XmlError(`mismatched closing tag ${closing}, expected ${tag}`);
        }
        this.skipSpace();
        this.expect(">");
        return children;
      }
      if (this.text[this.pos] === "<") {
        children.push(this.readElement());
        continue;
      }
      const next = this.text.indexOf("<", this.pos);
      const gap = next < 0 ? this.text.slice(this.pos) : this.text.slice(this.pos, next);
      if (gap.trim().length > 0) {
        throw new XmlError(`unexpected text content inside ${tag}`);
      }
      if (next < 0) throw new XmlError(`unterminated element ${tag}`);
      this.pos = next;
    }
  }
}

function unescapeAttr(value: string): string {
  return value
    .replaceAll("&lt;", "<")
    .replaceAll("&gt;", ">")
    .replaceAll("&quot;", '"')
    .replaceAll("&amp;", "&");
}
