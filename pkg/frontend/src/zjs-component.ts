// <zjs-component>: fetches the fragment named by remote-src, renders it
// inside the element, evaluates the fragment's scripts in one shared
// closure with the element as receiver, and binds every top-level
// function declaration as an instance method. Lifecycle hooks
// onConnected/onDisconnected run on insert/remove; static send()
// dispatches a method by selector, instance, or descendant element.
// Concurrent loads of one URL share a single fetch via a static
// promise cache. An optional static trace hook receives event records
// shaped like the conformance simulator's.

export type TraceRecord = {
  kind: string;
  instance: number | null;
  detail?: string;
  method?: string;
  args?: unknown[];
  reason?: string;
};

const TAG = "zjs-component";
const EXPR_PRECEDERS = "=(,:[!&|?";
let nextId = 1;

export function scanMethods(source: string): string[] {
  // comments and string/template literals blanked first; declarations
  // count only at brace depth 0 and only in statement position
  const blanked = source.replace(
    /\/\*[\s\S]*?\*\/|\/\/[^\n]*|'(?:\\.|[^'\\\n])*'|"(?:\\.|[^"\\\n])*"|`(?:\\.|[^`\\])*`/g,
    (hit) => hit.replace(/[^\n]/g, " "),
  );
  const names: string[] = [];
  const re = /[{}]|(?<![.\w$])(?:async\s+)?function\s*\*?\s*([A-Za-z_$][\w$]*)\s*\(/g;
  let depth = 0;
  for (let m = re.exec(blanked); m; m = re.exec(blanked)) {
    if (m[0] === "{") depth += 1;
    else if (m[0] === "}") depth = Math.max(0, depth - 1);
    else if (depth === 0 && m[1]) {
      const prev = blanked.slice(0, m.index).replace(/\s+$/, "");
      const isExpression = prev !== "" &&
        (EXPR_PRECEDERS.includes(prev.slice(-1)) || /(?:^|[^.\w$])return$/.test(prev));
      if (!isExpression && !names.includes(m[1])) names.push(m[1]);
    }
  }
  return names;
}

export class ZjsComponent extends HTMLElement {
  static observedAttributes = ["remote-src"];
  static fetches = new Map<string, Promise<string>>();
  static trace?: (record: TraceRecord) => void;

  readonly zid: number = nextId++;
  methods: Record<string, (...args: unknown[]) => unknown> = {};
  ready: Promise<void> = Promise.resolve();
  private zurl = "";
  private connected = false;

  static fetchFragment(url: string): Promise<string> {
    let pending = ZjsComponent.fetches.get(url);
    if (!pending) {
      pending = fetch(url).then((response) => {
        if (!response.ok) throw new Error(`status ${response.status} for ${url}`);
        return response.text();
      });
      pending.catch(() => ZjsComponent.fetches.delete(url));
      ZjsComponent.fetches.set(url, pending);
    }
    return pending;
  }

  static send(target: unknown, method: string, ...args: unknown[]): unknown {
    let el: ZjsComponent | null = null;
    if (typeof target === "string") {
      const hit = document.querySelector(target);
      if (!hit) throw new Error(`send: nothing matches ${target}`);
      if (!(hit instanceof ZjsComponent))
        throw new Error(`send: ${target} is not a ${TAG}`);
      el = hit;
    } else if (target instanceof ZjsComponent) {
      el = target;
    } else if (target instanceof Element) {
      el = target.closest(TAG) as ZjsComponent | null;
      if (!el) throw new Error(`send: element has no ${TAG} ancestor`);
    } else {
      throw new Error("send: target must be a selector, component, or element");
    }
    const fn = el.methods[method];
    if (typeof fn !== "function") {
      el.emit({ kind: "DispatchError", method, reason: `method-not-found: ${method}` });
      throw new Error(`send: ${method} is not a method of the target component`);
    }
    el.emit({ kind: "Dispatch", method, args, detail: `dispatch:${method}` });
    return fn.apply(el, args);
  }

  private emit(partial: Omit<TraceRecord, "instance">): void {
    ZjsComponent.trace?.({ instance: this.zid, ...partial });
  }

  private fail(reason: string): void {
    this.emit({ kind: "DispatchError", detail: this.getAttribute("remote-src") ?? "", reason });
    this.dispatchEvent(new CustomEvent("zjs-error", { detail: reason }));
  }

  private async load(): Promise<void> {
    const src = this.getAttribute("remote-src");
    if (!src) return this.fail("missing remote-src");
    this.zurl = new URL(src, this.baseURI).href;
    for (let a = this.parentElement?.closest(TAG); a; a = a.parentElement?.closest(TAG))
      if ((a as ZjsComponent).zurl === this.zurl) return this.fail(`include cycle: ${src}`);
    let text: string;
    try {
      text = await ZjsComponent.fetchFragment(this.zurl);
    } catch (err) {
      return this.fail(`fetch-failed: ${err}`);
    }
    this.emit({ kind: "FragmentFetched", detail: src });
    const display = this.getAttribute("display");
    if (display) this.style.display = display;
    this.innerHTML = text; // nested components begin their own loads here
    const scripts = Array.from(this.querySelectorAll("script")).filter(
      (node) => node.closest(TAG) === this,
    );
    const body = scripts.map((node) => node.textContent ?? "").join("\n;");
    const names = scanMethods(body);
    let table: Record<string, (...args: unknown[]) => unknown> = {};
    try {
      table = new Function(`${body}\n;return {${names.join(",")}};`).call(this);
    } catch (err) {
      this.fail(`script-error: ${err}`);
    }
    for (const name of names) {
      this.methods[name] = table[name];
      (this as Record<string, unknown> & ZjsComponent)[name] = table[name];
    }
    this.emit({ kind: "ScriptsEvaluated", detail: names.join(",") });
    const nested = Array.from(this.querySelectorAll(TAG)) as ZjsComponent[];
    await Promise.all(nested.map((child) => child.ready));
    if (typeof this.methods.onConnected === "function") this.methods.onConnected.call(this);
    this.emit({ kind: "Connected", detail: this.methods.onConnected ? "hook:onConnected" : "" });
    this.connected = true;
  }

  private closeEpisode(): void {
    if (!this.connected) return;
    this.connected = false;
    if (typeof this.methods.onDisconnected === "function") this.methods.onDisconnected.call(this);
    this.emit({
      kind: "Disconnected",
      detail: this.methods.onDisconnected ? "hook:onDisconnected" : "",
    });
  }

  connectedCallback(): void {
    this.ready = this.load();
  }

  disconnectedCallback(): void {
    this.closeEpisode();
  }

  attributeChangedCallback(_name: string, old: string | null, value: string | null): void {
    if (old === null || old === value || !this.isConnected) return;
    this.closeEpisode();
    this.methods = {};
    this.innerHTML = "";
    this.ready = this.load();
  }
}

// the single runtime registration: the element definition plus the global
// class binding inline handlers use for ZjsComponent.send(...)
if (!customElements.get(TAG)) customElements.define(TAG, ZjsComponent);
(globalThis as Record<string, unknown>).ZjsComponent = ZjsComponent;
