/**
 * Shell: hash router, fleet selector, and the connection settings panel
 * (API base URL plus optional bearer token).
 */

import { html, LitElement, nothing, type TemplateResult } from 'lit';
import { fetchHealth } from '../api/resources.js';
import { getSettings, SETTINGS_EVENT, updateSettings } from '../config.js';
import './queue-view.js';
import './incident-view.js';
import './models-view.js';

export type Route =
  | { view: 'queue' }
  | { view: 'incident'; id: string }
  | { view: 'models' };

export function parseRoute(hash: string): Route {
  const parts = hash.replace(/^#\/?/, '').split('/').filter(Boolean);
  if (parts[0] === 'incidents' && parts[1]) {
    return { view: 'incident', id: decodeURIComponent(parts[1]) };
  }
  if (parts[0] === 'models') return { view: 'models' };
  return { view: 'queue' };
}

export class AppShell extends LitElement {
  static override properties = {
    route: { state: true },
    fleets: { state: true },
    settingsOpen: { state: true },
    health: { state: true },
  };

  declare route: Route;
  declare fleets: string[];
  declare settingsOpen: boolean;
  declare health: 'unknown' | 'ok' | 'unreachable';

  private onHashChange = () => {
    this.route = parseRoute(window.location.hash);
  };
  private onSettingsChanged = () => this.requestUpdate();

  constructor() {
    super();
    this.route = parseRoute(window.location.hash);
    this.fleets = [];
    this.settingsOpen = false;
    this.health = 'unknown';
  }

  override createRenderRoot() {
    return this;
  }

  override connectedCallback() {
    super.connectedCallback();
    window.addEventListener('hashchange', this.onHashChange);
    window.addEventListener(SETTINGS_EVENT, this.onSettingsChanged);
    void this.loadFleets();
  }

  override disconnectedCallback() {
    window.removeEventListener('hashchange', this.onHashChange);
    window.removeEventListener(SETTINGS_EVENT, this.onSettingsChanged);
    super.disconnectedCallback();
  }

  async loadFleets() {
    try {
      const health = await fetchHealth();
      this.fleets = health.fleets;
      this.health = 'ok';
    } catch {
      this.fleets = [];
      this.health = 'unreachable';
    }
  }

  private setFleet(event: Event) {
    updateSettings({ fleet: (event.target as HTMLSelectElement).value });
  }

  private applyConnection(event: Event) {
    event.preventDefault();
    const form = event.target as HTMLFormElement;
    const data = new FormData(form);
    updateSettings({
      baseUrl: String(data.get('baseUrl') ?? '').replace(/\/+$/, ''),
      token: String(data.get('token') ?? ''),
    });
    this.settingsOpen = false;
    void this.loadFleets();
  }

  private renderSettings(): TemplateResult {
    const settings = getSettings();
    return html`
      <form class="settings-panel" @submit=${(e: Event) => this.applyConnection(e)}>
        <label>
          API base URL
          <input
            name="baseUrl"
            type="text"
            placeholder="same origin"
            .value=${settings.baseUrl}
          />
        </label>
        <label>
          Bearer token
          <input name="token" type="password" placeholder="none" .value=${settings.token} />
        </label>
        <button type="submit">Apply</button>
      </form>
    `;
  }

  private renderOutlet(): TemplateResult {
    const route = this.route;
    switch (route.view) {
      case 'incident':
        return html`<rd-incident .incidentId=${route.id}></rd-incident>`;
      case 'models':
        return html`<rd-models></rd-models>`;
      default:
        return html`<rd-queue></rd-queue>`;
    }
  }

  override render() {
    const settings = getSettings();
    const active = this.route.view;
    return html`
      <div class="app">
        <header class="topbar">
          <h1>Fault Review</h1>
          <nav>
            <a href="#/queue" class=${active === 'queue' || active === 'incident' ? 'active' : ''}>
              Queue
            </a>
            <a href="#/models" class=${active === 'models' ? 'active' : ''}>Models</a>
          </nav>
          <div class="topbar-right">
            ${this.fleets.length > 0
              ? html`
                  <label class="fleet-picker">
                    Fleet
                    <select @change=${(e: Event) => this.setFleet(e)}>
                      <option value="" ?selected=${!settings.fleet}>service default</option>
                      ${this.fleets.map(
                        (fleet) => html`
                          <option value=${fleet} ?selected=${settings.fleet === fleet}>
                            ${fleet}
                          </option>
                        `,
                      )}
                    </select>
                  </label>
                `
              : nothing}
            ${this.health === 'unreachable'
              ? html`<span class="badge badge-disagreement">service unreachable</span>`
              : nothing}
            <button class="settings-toggle" @click=${() => (this.settingsOpen = !this.settingsOpen)}>
              Connection
            </button>
          </div>
        </header>
        ${this.settingsOpen ? this.renderSettings() : nothing}
        <main>${this.renderOutlet()}</main>
      </div>
    `;
  }
}

customElements.define('rd-app', AppShell);
