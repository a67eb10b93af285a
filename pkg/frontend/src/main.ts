/** Browser entry point: mount the survey against the same-origin API. */

import { SurveyApi } from './api.js';
import { mountSurveyApp } from './app.js';

const root = document.getElementById('app');
if (!root) throw new Error('missing #app mount point');

const baseUrl = root.dataset.apiBase ?? '';
mountSurveyApp(root, new SurveyApi(baseUrl, window.fetch.bind(window)));
